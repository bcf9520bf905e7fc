from pathlib import Path

import click

from src.management.commands.options import input_path, output_path
from src.repositories import AnalysisReportRepository, CostBenefitCsvRepository
from src.services.analysis import cost_benefit_points
from src.utils.logger import get_logger

logger = get_logger(__name__)


@click.command("cost-benefit")
@input_path("--report", "Analysis report JSON written by 'analyze'.")
@output_path("CSV with columns readout, benefit, cost, in_target_region.")
def cost_benefit(report: Path, out_path: Path):
    """Benefit (intrinsic accuracy) against cost (1 - PVP) for every positive readout."""
    analysis = AnalysisReportRepository().load(report)
    points = cost_benefit_points(analysis)
    CostBenefitCsvRepository().save(points, out_path)

    in_region = [p.readout for p in points if p.in_target_region]
    logger.info(f"{len(in_region)} of {len(points)} readouts in the target region: {', '.join(in_region) or 'none'}")
    click.echo(f"Cost-benefit data written to {out_path}")
    return points
