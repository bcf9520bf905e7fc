import os
import sys
from typing import Optional

from loguru import logger


_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{file}:{line} | {message}"


def init_logger(level: str = "INFO", log_dir: Optional[str] = None) -> None:
    """
    Configure loguru sinks for the command line.

    Console output goes to stderr so that stdout stays free for the user;
    when ``log_dir`` is given every run is also appended to ``mced.log``
    there, with rotation and compression.
    """
    logger.remove()

    logger.add(
        sink=sys.stderr,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan> - <level>{message}</level>",
        level=level,
        colorize=True,
    )

    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        logger.add(
            sink=os.path.join(log_dir, "mced.log"),
            format=_FORMAT,
            rotation="30 days",
            retention="90 days",
            compression="zip",
            backtrace=True,
            diagnose=False,
            level="DEBUG",
        )

    logger.debug("Logger initialized")


def get_logger(name: Optional[str] = None):
    """
    Return a logger bound to a module name.

    Args:
        name: module name shown in the log line

    Returns:
        logger: the bound loguru logger
    """
    if name:
        return logger.bind(name=name)
    return logger
