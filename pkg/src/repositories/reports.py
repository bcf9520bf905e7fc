from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from src.core.exceptions import ParseErrorException
from src.interfaces.repository import PathLike
from src.repositories.base import FileRepository, percent, sibling
from src.schemas.common import EstimateInterval
from src.schemas.report import AnalysisReport, CostBenefitPoint, StratifiedReport
from src.schemas.simulation import StudyReport, StudyStats
from src.utils.logger import get_logger

logger = get_logger(__name__)

INTRINSIC_COLUMNS = ("state", "cases", "false_negative", "accuracy", "ci_low", "ci_up", "flags")
PREDICTIVE_COLUMNS = (
    "readout",
    "marginal",
    "marginal_ci_low",
    "marginal_ci_up",
    "pvp",
    "pvp_ci_low",
    "pvp_ci_up",
    "pvn",
    "pvn_ci_low",
    "pvn_ci_up",
)
STUDY_COLUMNS = ("Metric", "Value", "Bias", "Coverage", "Width", "Failures")
STAGE_COLUMNS = ("readout", "stage", "stage_share", "pvp", "ci_low", "ci_up")
COST_BENEFIT_COLUMNS = ("readout", "benefit", "cost", "in_target_region")


def _interval_cells(prefix: str, interval: Optional[EstimateInterval]) -> Dict[str, str]:
    if interval is None:
        return {prefix: "", f"{prefix}_ci_low": "", f"{prefix}_ci_up": ""}
    return {
        prefix: percent(interval.point),
        f"{prefix}_ci_low": percent(interval.lower),
        f"{prefix}_ci_up": percent(interval.upper),
    }


class AnalysisReportRepository(FileRepository):
    """
    Analysis report as JSON plus two table-shaped CSVs next to it:
    ``<stem>.intrinsic.csv`` (false-negative rate and intrinsic accuracy per
    state) and ``<stem>.predictive.csv`` (marginal readout distribution and
    predictive values per readout). CSV values are percents with one decimal.
    """

    def load(self, path: PathLike, **kwargs: Any) -> AnalysisReport:
        payload = self._read_json(path)
        try:
            return AnalysisReport.model_validate(payload)
        except ValidationError as exc:
            raise ParseErrorException(f"'{path}' is not an analysis report: {exc.error_count()} problem(s)") from exc

    def save(self, obj: AnalysisReport, path: PathLike, **kwargs: Any) -> Path:
        written = self._write_json(path, obj.model_dump(mode="json"))
        self._write_csv(sibling(path, "intrinsic"), INTRINSIC_COLUMNS, self.intrinsic_rows(obj))
        self._write_csv(sibling(path, "predictive"), PREDICTIVE_COLUMNS, self.predictive_rows(obj))
        return written

    @staticmethod
    def intrinsic_rows(report: AnalysisReport) -> List[Dict[str, str]]:
        rows = []
        for block in report.states:
            accuracy = block.accuracy
            rows.append(
                {
                    "state": block.state,
                    "cases": str(block.cases),
                    "false_negative": percent(block.false_negative.point) if block.false_negative else "",
                    "accuracy": percent(accuracy.point) if accuracy else "",
                    "ci_low": percent(accuracy.lower) if accuracy else "",
                    "ci_up": percent(accuracy.upper) if accuracy else "",
                    "flags": ";".join(sorted(str(f) for f in accuracy.flags)) if accuracy else "",
                }
            )
        return rows

    @staticmethod
    def predictive_rows(report: AnalysisReport) -> List[Dict[str, str]]:
        rows = []
        for block in report.predictive:
            row = {"readout": block.readout}
            row.update(_interval_cells("marginal", block.marginal))
            row.update(_interval_cells("pvp", block.pvp.interval if block.pvp else None))
            row.update(_interval_cells("pvn", block.pvn.interval if block.pvn else None))
            rows.append(row)
        return rows


class StratifiedReportRepository(FileRepository):
    """Stratified report as JSON; stage runs also get ``<stem>.stages.csv``."""

    def load(self, path: PathLike, **kwargs: Any) -> StratifiedReport:
        payload = self._read_json(path)
        try:
            return StratifiedReport.model_validate(payload)
        except ValidationError as exc:
            raise ParseErrorException(f"'{path}' is not a stratified report: {exc.error_count()} problem(s)") from exc

    def save(self, obj: StratifiedReport, path: PathLike, **kwargs: Any) -> Path:
        written = self._write_json(path, obj.model_dump(mode="json"))
        if obj.stage_values:
            rows = [
                {
                    "readout": row.readout,
                    "stage": row.stage,
                    "stage_share": percent(row.stage_share),
                    "pvp": percent(row.pvp.point, 2),
                    "ci_low": percent(row.pvp.interval.lower, 2),
                    "ci_up": percent(row.pvp.interval.upper, 2),
                }
                for row in obj.stage_values
            ]
            self._write_csv(sibling(path, "stages"), STAGE_COLUMNS, rows)
        return written


class StudyReportRepository(FileRepository):
    """
    Study report as JSON plus ``<stem>.table.csv`` with one row per metric:
    true value, bias, coverage and mean width, all in percents with three
    decimals. Paired studies show ``adjusted (unadjusted)`` cells.
    """

    def load(self, path: PathLike, **kwargs: Any) -> StudyReport:
        payload = self._read_json(path)
        try:
            return StudyReport.model_validate(payload)
        except ValidationError as exc:
            raise ParseErrorException(f"'{path}' is not a study report: {exc.error_count()} problem(s)") from exc

    def save(self, obj: StudyReport, path: PathLike, **kwargs: Any) -> Path:
        written = self._write_json(path, obj.model_dump(mode="json"))
        self._write_csv(sibling(path, "table"), STUDY_COLUMNS, self.table_rows(obj))
        return written

    @staticmethod
    def table_rows(report: StudyReport) -> List[Dict[str, str]]:
        def cell(name: str, stats: StudyStats, paired: Optional[StudyStats]) -> str:
            text = f"{getattr(stats, name):.3f}"
            if paired is not None:
                text += f" ({getattr(paired, name):.3f})"
            return text

        rows = []
        for row in report.rows:
            failures = str(row.stats.failures)
            if row.unadjusted is not None:
                failures += f" ({row.unadjusted.failures})"
            rows.append(
                {
                    "Metric": row.metric,
                    "Value": f"{row.truth:.3f}",
                    "Bias": cell("bias", row.stats, row.unadjusted),
                    "Coverage": cell("coverage", row.stats, row.unadjusted),
                    "Width": cell("width", row.stats, row.unadjusted),
                    "Failures": failures,
                }
            )
        return rows


class CostBenefitCsvRepository(FileRepository):
    """Cost-benefit scatter data, one row per positive readout."""

    def load(self, path: PathLike, **kwargs: Any) -> List[CostBenefitPoint]:
        rows = self._read_csv_rows(path)
        if not rows or [c.strip() for c in rows[0]] != list(COST_BENEFIT_COLUMNS):
            raise ParseErrorException(f"'{path}' header must be {','.join(COST_BENEFIT_COLUMNS)}")
        try:
            return [CostBenefitPoint(readout=row[0], benefit=float(row[1]), cost=float(row[2])) for row in rows[1:]]
        except (ValueError, IndexError, ValidationError) as exc:
            raise ParseErrorException(f"'{path}' has a malformed row: {exc}") from exc

    def save(self, obj: List[CostBenefitPoint], path: PathLike, **kwargs: Any) -> Path:
        rows = [
            {
                "readout": point.readout,
                "benefit": f"{point.benefit:.4f}",
                "cost": f"{point.cost:.4f}",
                "in_target_region": str(point.in_target_region).lower(),
            }
            for point in obj
        ]
        return self._write_csv(path, COST_BENEFIT_COLUMNS, rows)
