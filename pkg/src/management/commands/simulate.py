from pathlib import Path
from typing import Optional

import click

from src.management.commands.options import input_path, output_path
from src.repositories import ScenarioJsonRepository, StudyReportRepository
from src.services.simulation import run_study
from src.utils.logger import get_logger

logger = get_logger(__name__)


@click.command("simulate")
@input_path("--scenario", "Scenario JSON carrying every ScenarioSpec field.")
@output_path("Study JSON; the percent table is written to <stem>.table.csv.")
@click.option(
    "--workers",
    type=click.IntRange(min=1),
    default=None,
    help="Worker processes (default MCED_SIM_WORKERS). Results do not depend on it.",
)
def simulate(scenario: Path, out_path: Path, workers: Optional[int]):
    """Monte Carlo bias, coverage and width of every estimator."""
    spec = ScenarioJsonRepository().load(scenario)
    report = run_study(spec, workers=workers)
    StudyReportRepository().save(report, out_path)
    click.echo(f"Study '{spec.name}' ({report.replicates} replicates) written to {out_path}")
    return report
