from pathlib import Path
from typing import Optional

import click

from src.core.enums import AdjustPolicy
from src.management.commands.options import adjust_option, alpha_option, input_digests, input_path, output_path
from src.repositories import IncidenceJsonRepository, RecordsCsvRepository, StratifiedReportRepository
from src.services.analysis import analyze_strata
from src.utils.logger import get_logger

logger = get_logger(__name__)


@click.command("analyze-strata")
@input_path("--records", "Long-format CSV with columns state, stratum, readout, count.")
@input_path("--incidence", "Incidence JSON; an optional 'strata' map gives per-stratum incidence.")
@alpha_option
@adjust_option
@click.option("--stage", is_flag=True, help="Treat strata as disease stages and decompose every PVP.")
@output_path("Report JSON; stage runs also write <stem>.stages.csv.")
def analyze_strata_command(
    records: Path,
    incidence: Path,
    alpha: Optional[float],
    adjust_policy: Optional[str],
    stage: bool,
    out_path: Path,
):
    """Pooled analysis plus per-stratum analyses or the stage decomposition."""
    logger.info(f"analyze-strata: {records} ({'stage' if stage else 'demographic'} strata)")
    stratified = RecordsCsvRepository().load(records)
    spec = IncidenceJsonRepository().load(incidence, state_labels=stratified.pooled.state_labels)

    report = analyze_strata(
        stratified,
        spec,
        alpha=alpha,
        adjust_policy=AdjustPolicy(adjust_policy) if adjust_policy else None,
        digests=input_digests([records, incidence]),
        stage=stage,
    )
    StratifiedReportRepository().save(report, out_path)

    for metric, reason in report.errors.items():
        logger.warning(f"Not computed: {metric} ({reason})")
    click.echo(f"Stratified analysis written to {out_path}")
    return report
