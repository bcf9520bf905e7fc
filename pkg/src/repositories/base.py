import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from src.core.config import settings
from src.core.exceptions import ParseErrorException, ReportIOException
from src.interfaces.repository import IRepository, PathLike
from src.utils.logger import get_logger

logger = get_logger(__name__)


def sha256_digest(path: PathLike) -> str:
    """Hex SHA-256 of a file's bytes."""
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise ReportIOException(f"Cannot read '{path}': {exc.strerror or exc}") from exc


def round_significant(value: Any, digits: int) -> Any:
    """Round every float inside nested dicts and lists to ``digits`` significant digits."""
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        if not math.isfinite(value) or value == 0.0:
            return value
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {key: round_significant(item, digits) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_significant(item, digits) for item in value]
    return value


def sibling(path: PathLike, tag: str, suffix: str = ".csv") -> Path:
    """``out/report.json`` -> ``out/report.<tag>.csv``."""
    path = Path(path)
    return path.with_name(f"{path.stem}.{tag}{suffix}")


def percent(value: float, decimals: int = 1) -> str:
    return f"{100.0 * value:.{decimals}f}"


class FileRepository(IRepository):
    """
    Shared file plumbing for the CSV and JSON repositories.

    Every OS-level failure becomes a ReportIOException (exit code 1); content
    problems become ParseErrorException (exit code 2).
    """

    def _read_text(self, path: PathLike) -> str:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise ParseErrorException(f"'{path}' is not UTF-8 text") from exc
        except OSError as exc:
            raise ReportIOException(f"Cannot read '{path}': {exc.strerror or exc}") from exc
        logger.debug(f"Read {len(text)} characters from {path}")
        return text

    def _read_json(self, path: PathLike) -> Any:
        text = self._read_text(path)
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseErrorException(f"'{path}' is not valid JSON: {exc.msg} (line {exc.lineno})") from exc

    def _read_csv_rows(self, path: PathLike) -> List[List[str]]:
        """CSV rows with blank lines and ``#`` comment lines removed."""
        lines = [
            line for line in self._read_text(path).splitlines() if line.strip() and not line.lstrip().startswith("#")
        ]
        try:
            return [row for row in csv.reader(lines)]
        except csv.Error as exc:
            raise ParseErrorException(f"'{path}' is not valid CSV: {exc}") from exc

    def _write_text(self, path: PathLike, text: str) -> Path:
        path = Path(path)
        try:
            if path.parent and not path.parent.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", encoding="utf-8", newline="") as handle:
                handle.write(text)
        except OSError as exc:
            raise ReportIOException(f"Cannot write '{path}': {exc.strerror or exc}") from exc
        logger.info(f"Wrote {path}")
        return path

    def _write_json(self, path: PathLike, payload: Any) -> Path:
        rounded = round_significant(payload, settings.REPORT_SIGNIFICANT_DIGITS)
        return self._write_text(path, json.dumps(rounded, indent=2, sort_keys=True, ensure_ascii=False) + "\n")

    def _write_csv(self, path: PathLike, fieldnames: Sequence[str], rows: Iterable[Dict[str, Any]]) -> Path:
        path = Path(path)
        try:
            if not path.parent.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", encoding="utf-8", newline="") as handle:
                writer = csv.DictWriter(handle, fieldnames=list(fieldnames), lineterminator="\n")
                writer.writeheader()
                for row in rows:
                    writer.writerow(row)
        except OSError as exc:
            raise ReportIOException(f"Cannot write '{path}': {exc.strerror or exc}") from exc
        logger.info(f"Wrote {path}")
        return path
