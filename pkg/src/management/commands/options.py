"""Options shared by the analysis commands."""

from pathlib import Path
from typing import Dict, Iterable

import click

from src.core.enums import AdjustPolicy
from src.repositories import sha256_digest

alpha_option = click.option(
    "--alpha",
    type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True),
    default=None,
    help="Two-sided error rate of every interval (default MCED_DEFAULT_ALPHA, 0.05).",
)

adjust_option = click.option(
    "--adjust",
    "adjust_policy",
    type=click.Choice([p.value for p in AdjustPolicy], case_sensitive=False),
    default=None,
    help="Half-count adjustment of the control row (default MCED_ADJUST_POLICY, auto).",
)


def input_path(flag: str, help_text: str):
    return click.option(flag, required=True, type=click.Path(dir_okay=False, path_type=Path), help=help_text)


def output_path(help_text: str = "Where to write the report."):
    return click.option(
        "--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path), help=help_text
    )


def input_digests(paths: Iterable[Path]) -> Dict[str, str]:
    """SHA-256 per input, keyed by file name so reports do not depend on the working directory."""
    return {path.name: sha256_digest(path) for path in paths}
