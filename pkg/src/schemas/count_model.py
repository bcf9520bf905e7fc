from typing import Tuple

import numpy as np
from pydantic import Field, model_validator

from src.core.enums import AdjustPolicy
from src.core.exceptions import (
    DimensionMismatchException,
    EmptyCaseBlockException,
    EmptyControlRowException,
    LabelMismatchException,
    NegativeCountException,
)
from src.schemas.common import FrozenModel


class CountMatrix(FrozenModel):
    """
    Disease-state by readout frequency table.

    Row 0 is the control state, column 0 the Negative readout. Readout k
    (k = 1..K) names the same disease as state k; states K+1..J have no
    readout of their own.
    """

    state_labels: Tuple[str, ...] = Field(..., description="J+1 state labels, index 0 = control")
    readout_labels: Tuple[str, ...] = Field(..., description="K+1 readout labels, index 0 = Negative")
    counts: Tuple[Tuple[int, ...], ...] = Field(..., description="(J+1) x (K+1) counts n_jk")

    @model_validator(mode="after")
    def check_invariants(self) -> "CountMatrix":
        n_rows, n_cols = len(self.state_labels), len(self.readout_labels)
        if n_rows < 2 or n_cols < 2:
            raise DimensionMismatchException("Count matrix needs at least 2 rows and 2 columns")
        if len(self.counts) != n_rows or any(len(row) != n_cols for row in self.counts):
            raise DimensionMismatchException(
                f"Count grid must be {n_rows} x {n_cols} to match the labels"
            )
        if n_rows < n_cols:
            raise DimensionMismatchException(
                f"Need J >= K, got J={n_rows - 1} states and K={n_cols - 1} readouts"
            )
        if any(c < 0 for row in self.counts for c in row):
            raise NegativeCountException()
        for k in range(1, n_cols):
            if self.readout_labels[k] != self.state_labels[k]:
                raise LabelMismatchException(
                    f"Readout {k} is '{self.readout_labels[k]}' but state {k} is '{self.state_labels[k]}'"
                )
        if sum(self.counts[0]) == 0:
            raise EmptyControlRowException()
        if sum(sum(row) for row in self.counts[1:]) == 0:
            raise EmptyCaseBlockException()
        return self

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    @property
    def J(self) -> int:
        return len(self.state_labels) - 1

    @property
    def K(self) -> int:
        return len(self.readout_labels) - 1

    @property
    def row_totals(self) -> np.ndarray:
        return self.array.sum(axis=1)

    @property
    def column_totals(self) -> np.ndarray:
        return self.array.sum(axis=0)

    @property
    def N0(self) -> int:
        return int(sum(self.counts[0]))

    @property
    def N1(self) -> int:
        return int(self.row_totals[1:].sum())

    @property
    def N(self) -> int:
        return self.N0 + self.N1

    @property
    def case_labels(self) -> Tuple[str, ...]:
        return self.state_labels[1:]

    def state_index(self, label: str) -> int:
        try:
            return self.state_labels.index(label.strip())
        except ValueError:
            raise LabelMismatchException(f"Unknown disease state '{label}'")

    def readout_index(self, label: str) -> int:
        try:
            return self.readout_labels.index(label.strip())
        except ValueError:
            raise LabelMismatchException(f"Unknown readout '{label}'")


class AdjustedControlRow(FrozenModel):
    adjusted_counts: Tuple[float, ...] = Field(..., description="n*_0k, K+1 values")
    adjusted_total: float = Field(..., description="N0 + 0.5(K+1) when applied, N0 otherwise")
    applied: bool = Field(..., description="Whether one half was added to every control cell")
    policy: AdjustPolicy = Field(..., description="Policy that produced this row")

    @property
    def shares(self) -> np.ndarray:
        return np.asarray(self.adjusted_counts, dtype=float) / self.adjusted_total

    def share(self, k: int) -> float:
        return self.adjusted_counts[k] / self.adjusted_total


class CaseShareVector(FrozenModel):
    shares: Tuple[float, ...] = Field(..., description="p_j = P(D_j | D), j = 1..J")
    basis: int = Field(..., ge=0, description="N1 the shares were estimated from (0 for registry values)")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.shares, dtype=float)

    @property
    def free(self) -> np.ndarray:
        """The J-1 shares that are free parameters; the last one is 1 minus their sum."""
        return self.array[:-1]


class CollapsedMatrix(FrozenModel):
    readout_labels: Tuple[str, ...]
    control_row: Tuple[int, ...] = Field(..., description="n_0k")
    case_row: Tuple[int, ...] = Field(..., description="n_+k - n_0k")

    @model_validator(mode="after")
    def check_rows(self) -> "CollapsedMatrix":
        if len(self.control_row) != len(self.case_row) or len(self.case_row) != len(self.readout_labels):
            raise DimensionMismatchException("Collapsed rows must match the readout labels")
        if any(c < 0 for c in self.case_row) or any(c < 0 for c in self.control_row):
            raise NegativeCountException("Collapsed case row has a negative cell")
        return self

    @property
    def N0(self) -> int:
        return int(sum(self.control_row))

    @property
    def N1(self) -> int:
        return int(sum(self.case_row))

    @property
    def K(self) -> int:
        return len(self.readout_labels) - 1

    @property
    def column_totals(self) -> np.ndarray:
        return np.asarray(self.control_row) + np.asarray(self.case_row)
