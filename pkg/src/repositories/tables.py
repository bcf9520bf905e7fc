from pathlib import Path
from typing import Any, List

from src.core.exceptions import ParseErrorException
from src.interfaces.repository import PathLike
from src.repositories.base import FileRepository
from src.schemas.count_model import CountMatrix
from src.schemas.strata import StratifiedRecords, StratumRecord
from src.services.count_model import validate_matrix
from src.services.stage_strata import partition_by_stratum
from src.utils.logger import get_logger

logger = get_logger(__name__)

RECORD_COLUMNS = ("state", "stratum", "readout", "count")


def _parse_count(cell: str, where: str) -> int:
    text = cell.strip()
    try:
        return int(text)
    except ValueError:
        raise ParseErrorException(f"{where}: '{cell}' is not an integer count")


class MatrixCsvRepository(FileRepository):
    """
    Count table in wide form::

        state,Negative,Lung,...
        Control,606,0,...
        Lung,39,71,...

    The first data row is the control state. Lines starting with ``#`` are comments.
    """

    def load(self, path: PathLike, **kwargs: Any) -> CountMatrix:
        rows = self._read_csv_rows(path)
        if len(rows) < 3:
            raise ParseErrorException(f"'{path}' needs a header, a control row and at least one case row")

        header = [cell.strip() for cell in rows[0]]
        if header[0].lower() != "state":
            raise ParseErrorException(f"'{path}': first header cell must be 'state', got '{header[0]}'")

        state_labels: List[str] = []
        counts: List[List[int]] = []
        for line_no, row in enumerate(rows[1:], start=2):
            if len(row) != len(header):
                raise ParseErrorException(
                    f"'{path}' row {line_no} has {len(row)} cells, the header has {len(header)}"
                )
            state_labels.append(row[0].strip())
            counts.append([_parse_count(cell, f"'{path}' row {line_no}") for cell in row[1:]])

        matrix = validate_matrix(counts, state_labels, header[1:])
        logger.info(f"Loaded {matrix.J} states x {matrix.K} readouts from {path}")
        return matrix

    def save(self, obj: CountMatrix, path: PathLike, **kwargs: Any) -> Path:
        header = ("state",) + obj.readout_labels
        rows = [dict(zip(header, (label,) + tuple(row))) for label, row in zip(obj.state_labels, obj.counts)]
        return self._write_csv(path, header, rows)


class RecordsCsvRepository(FileRepository):
    """Long-format records with columns ``state,stratum,readout,count``."""

    def load(self, path: PathLike, **kwargs: Any) -> StratifiedRecords:
        rows = self._read_csv_rows(path)
        if not rows:
            raise ParseErrorException(f"'{path}' is empty")

        header = [cell.strip().lower() for cell in rows[0]]
        missing = [column for column in RECORD_COLUMNS if column not in header]
        if missing:
            raise ParseErrorException(f"'{path}' lacks column(s) {', '.join(missing)}")
        index = {column: header.index(column) for column in RECORD_COLUMNS}

        records = []
        for line_no, row in enumerate(rows[1:], start=2):
            if len(row) != len(header):
                raise ParseErrorException(f"'{path}' row {line_no} has {len(row)} cells, expected {len(header)}")
            count = _parse_count(row[index["count"]], f"'{path}' row {line_no}")
            if count < 0:
                raise ParseErrorException(f"'{path}' row {line_no}: negative count {count}")
            records.append(
                StratumRecord(
                    state=row[index["state"]].strip(),
                    stratum=row[index["stratum"]].strip(),
                    readout=row[index["readout"]].strip(),
                    count=count,
                )
            )

        stratified = partition_by_stratum(records)
        logger.info(f"Loaded {len(records)} records in {len(stratified.labels)} strata from {path}")
        return stratified

    def save(self, obj: StratifiedRecords, path: PathLike, **kwargs: Any) -> Path:
        return self._write_csv(path, RECORD_COLUMNS, (record.model_dump() for record in obj.records))
