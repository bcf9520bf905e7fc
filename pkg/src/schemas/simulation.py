from typing import Optional, Tuple

import numpy as np
from pydantic import ConfigDict, Field, model_validator

from src.core.enums import AdjustPolicy, IncidenceMode
from src.core.exceptions import InvalidScenarioException
from src.schemas.common import FrozenModel

_ROW_TOLERANCE = 1e-12


class ScenarioSpec(FrozenModel):
    """
    Population and design of a Monte Carlo study.

    ``control_row`` is P(T_k|D_0) and ``case_rows[j-1]`` is P(T_k|D_j), each
    of length K+1; ``case_shares`` are the J-1 free shares P(D_j|D).
    """

    name: str = ""
    n0: int
    n1: int
    overall_incidence: float
    case_shares: Tuple[float, ...]
    control_row: Tuple[float, ...]
    case_rows: Tuple[Tuple[float, ...], ...]
    state_labels: Optional[Tuple[str, ...]] = None
    replicates: int = 10_000
    seed: int = 0
    alpha: float = 0.05
    incidence_mode: IncidenceMode = IncidenceMode.SAMPLE
    adjust_policy: AdjustPolicy = AdjustPolicy.OFF
    compare_unadjusted: bool = Field(default=False, description="Also evaluate every replicate without adjustment")

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "name": "screening_500",
                "n0": 500,
                "n1": 500,
                "overall_incidence": 0.016,
                "case_shares": [0.5, 0.4],
                "control_row": [0.98, 0.01, 0.01],
                "case_rows": [[0.25, 0.65, 0.10], [0.30, 0.20, 0.50], [0.60, 0.20, 0.20]],
                "replicates": 10000,
                "seed": 20240601,
                "incidence_mode": "sample",
                "adjust_policy": "off",
            }
        },
    )

    @model_validator(mode="after")
    def check_scenario(self) -> "ScenarioSpec":
        J, K = len(self.case_rows), len(self.control_row) - 1
        problems = []
        if self.n0 < 1 or self.n1 < 1:
            problems.append("n0 and n1 must be positive")
        if not (0.0 < self.overall_incidence < 1.0):
            problems.append("overall_incidence must lie in (0, 1)")
        if K < 1 or J < K:
            problems.append(f"need J >= K >= 1, got J={J}, K={K}")
        if len(self.case_shares) != J - 1:
            problems.append(f"case_shares needs J-1 = {J - 1} entries")
        if any(p < 0 for p in self.case_shares) or sum(self.case_shares) > 1.0 + _ROW_TOLERANCE:
            problems.append("case_shares must be nonnegative and sum to at most 1")
        for name, row in [("control_row", self.control_row)] + [
            (f"case_rows[{i}]", row) for i, row in enumerate(self.case_rows)
        ]:
            if len(row) != K + 1:
                problems.append(f"{name} must have K+1 = {K + 1} entries")
            elif any(v < 0 or v > 1 for v in row) or abs(sum(row) - 1.0) > _ROW_TOLERANCE:
                problems.append(f"{name} must be a probability vector")
        if self.state_labels is not None and len(self.state_labels) != J + 1:
            problems.append(f"state_labels needs J+1 = {J + 1} entries")
        if self.replicates < 1:
            problems.append("replicates must be at least 1")
        if not (0 <= self.seed < 2**64):
            problems.append("seed must be an unsigned 64-bit integer")
        if not (0.0 < self.alpha < 1.0):
            problems.append("alpha must lie in (0, 1)")
        if problems:
            raise InvalidScenarioException("; ".join(problems))
        return self

    @property
    def J(self) -> int:
        return len(self.case_rows)

    @property
    def K(self) -> int:
        return len(self.control_row) - 1

    @property
    def shares(self) -> np.ndarray:
        free = np.asarray(self.case_shares, dtype=float)
        return np.append(free, max(1.0 - free.sum(), 0.0))

    @property
    def conditional(self) -> np.ndarray:
        """(J+1) x (K+1) matrix of P(T_k|D_j), row 0 the controls."""
        return np.vstack([self.control_row, *self.case_rows]).astype(float)

    @property
    def labels(self) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
        states = self.state_labels or ("Control",) + tuple(f"D{j}" for j in range(1, self.J + 1))
        return tuple(states), ("Negative",) + tuple(states[1 : self.K + 1])

    @property
    def metric_ids(self) -> Tuple[str, ...]:
        K = self.K
        return (
            ("SP_0",)
            + tuple(f"A_{k}" for k in range(1, K + 1))
            + ("PVN_0",)
            + tuple(f"PVP_{k}" for k in range(1, K + 1))
            + tuple(f"P(T_{k})" for k in range(K + 1))
        )


class StudyStats(FrozenModel):
    bias: float = Field(..., description="Mean estimate minus truth, percentage points")
    coverage: float = Field(..., ge=0, le=100, description="Percent of replicates whose interval holds the truth")
    width: float = Field(..., ge=0, description="Mean interval width, percentage points")
    failures: int = Field(default=0, ge=0, description="Replicates where the metric could not be computed")


class StudyRow(FrozenModel):
    metric: str
    truth: float = Field(..., description="True value, percent")
    stats: StudyStats
    unadjusted: Optional[StudyStats] = None


class StudyReport(FrozenModel):
    scenario: ScenarioSpec
    replicates: int
    seed: int
    alpha: float
    adjusted_replicates: int = Field(..., description="Replicates analysed with half-adjusted control counts")
    rows: Tuple[StudyRow, ...]
