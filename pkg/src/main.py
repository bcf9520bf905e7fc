import click

from src.core.config import settings
from src.management.commands import analyze, analyze_strata_command, cost_benefit, simulate
from src.utils.logger import get_logger, init_logger

logger = get_logger(__name__)


@click.group()
@click.option(
    "--log-level",
    type=click.Choice(["TRACE", "DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Log level on stderr (default MCED_LOG_LEVEL).",
)
@click.version_option(settings.VERSION, prog_name="mced")
def cli(log_level):
    """Case-control performance metrics for multi-cancer early detection tests."""
    init_logger((log_level or settings.LOG_LEVEL).upper(), settings.LOG_DIR)


cli.add_command(analyze)
cli.add_command(simulate)
cli.add_command(cost_benefit)
cli.add_command(analyze_strata_command)


if __name__ == "__main__":
    cli()
