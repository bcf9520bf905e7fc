"""
Count-table construction, collapsing, sparse-count adjustment and case shares.
"""

from typing import Sequence

import numpy as np

from src.core.config import settings
from src.core.enums import AdjustPolicy
from src.core.exceptions import DimensionMismatchException, EmptyCaseBlockException, ParseErrorException
from src.schemas.count_model import AdjustedControlRow, CaseShareVector, CollapsedMatrix, CountMatrix
from src.utils.logger import get_logger

logger = get_logger(__name__)


def validate_matrix(
    raw_counts: Sequence[Sequence[int]],
    state_labels: Sequence[str],
    readout_labels: Sequence[str],
) -> CountMatrix:
    """
    Build a CountMatrix from a rectangular integer grid.

    Labels are trimmed of surrounding whitespace and compared exactly.
    Every invariant breach raises; nothing is repaired.
    """
    rows = [list(row) for row in raw_counts]
    if len(rows) < 2 or any(len(row) != len(rows[0]) for row in rows) or len(rows[0]) < 2:
        raise DimensionMismatchException("Counts must form a rectangular grid of at least 2 x 2")

    grid = []
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (bool, np.bool_)) or not float(cell).is_integer():
                raise ParseErrorException(f"Count '{cell}' is not an integer")
            cells.append(int(cell))
        grid.append(tuple(cells))

    matrix = CountMatrix(
        state_labels=tuple(str(label).strip() for label in state_labels),
        readout_labels=tuple(str(label).strip() for label in readout_labels),
        counts=tuple(grid),
    )
    logger.debug(f"Validated {matrix.J + 1}x{matrix.K + 1} matrix, N0={matrix.N0}, N1={matrix.N1}")
    return matrix


def collapse_cases(matrix: CountMatrix) -> CollapsedMatrix:
    """Fold all case states into one row: n_+k - n_0k."""
    columns = matrix.column_totals
    control = matrix.array[0]
    return CollapsedMatrix(
        readout_labels=matrix.readout_labels,
        control_row=tuple(int(c) for c in control),
        case_row=tuple(int(c) for c in columns - control),
    )


def adjust_control_counts(
    matrix: CountMatrix, policy: AdjustPolicy, threshold: int = None
) -> AdjustedControlRow:
    """
    Add one half to every control cell when the policy asks for it.

    ``auto`` applies the adjustment when the smallest observed false-positive
    count n_0k (k >= 1) is below ``threshold``.
    """
    threshold = settings.ADJUST_THRESHOLD if threshold is None else threshold
    policy = AdjustPolicy(policy)
    control = matrix.array[0]

    if policy == AdjustPolicy.ON:
        applied = True
    elif policy == AdjustPolicy.OFF:
        applied = False
    else:
        applied = bool(control[1:].min() < threshold)

    if not applied:
        return AdjustedControlRow(
            adjusted_counts=tuple(float(c) for c in control),
            adjusted_total=float(matrix.N0),
            applied=False,
            policy=policy,
        )

    logger.debug(f"Adding 0.5 to control counts (policy={policy}, min FP={int(control[1:].min())})")
    return AdjustedControlRow(
        adjusted_counts=tuple(float(c) + 0.5 for c in control),
        adjusted_total=matrix.N0 + 0.5 * (matrix.K + 1),
        applied=True,
        policy=policy,
    )


def case_shares(matrix: CountMatrix) -> CaseShareVector:
    """Multinomial MLE of P(D_j | D); the last share closes the sum to one."""
    n1 = matrix.N1
    if n1 == 0:
        raise EmptyCaseBlockException()
    totals = matrix.row_totals[1:].astype(float)
    free = totals[:-1] / n1
    last = 1.0 - float(free.sum())
    return CaseShareVector(shares=tuple(float(s) for s in free) + (max(last, 0.0),), basis=n1)


def expected_false_positives(control_probs: Sequence[float], n0: int) -> np.ndarray:
    """Expected control counts N0 * P(T_k | D_0) for the positive readouts."""
    return n0 * np.asarray(control_probs, dtype=float)[1:]


def recommend_adjustment(control_probs: Sequence[float], n0: int, threshold: int = None) -> bool:
    """Rule of thumb for study design: adjust when some expected false-positive count is below the threshold."""
    threshold = settings.ADJUST_THRESHOLD if threshold is None else threshold
    return bool(expected_false_positives(control_probs, n0).min() < threshold)
