from pathlib import Path
from typing import Optional

import click

from src.core.enums import AdjustPolicy
from src.management.commands.options import adjust_option, alpha_option, input_digests, input_path, output_path
from src.repositories import AnalysisReportRepository, IncidenceJsonRepository, MatrixCsvRepository
from src.services.analysis import analyze_matrix
from src.utils.logger import get_logger

logger = get_logger(__name__)


@click.command("analyze")
@input_path("--matrix", "Count table CSV: header 'state' then readout labels, control row first.")
@input_path("--incidence", "Incidence JSON with 'overall', 'mode' and optional 'shares'.")
@alpha_option
@adjust_option
@output_path("Report JSON; table CSVs are written next to it.")
def analyze(matrix: Path, incidence: Path, alpha: Optional[float], adjust_policy: Optional[str], out_path: Path):
    """
    Intrinsic accuracy, predictive values and the marginal readout
    distribution of one case-control count table.
    """
    logger.info(f"analyze: {matrix} with incidence {incidence}")
    table = MatrixCsvRepository().load(matrix)
    spec = IncidenceJsonRepository().load(incidence, state_labels=table.state_labels)

    report = analyze_matrix(
        table,
        spec,
        alpha=alpha,
        adjust_policy=AdjustPolicy(adjust_policy) if adjust_policy else None,
        digests=input_digests([matrix, incidence]),
    )
    AnalysisReportRepository().save(report, out_path)

    for metric, reason in report.errors.items():
        logger.warning(f"Not computed: {metric} ({reason})")
    click.echo(f"Analysis written to {out_path}")
    return report
