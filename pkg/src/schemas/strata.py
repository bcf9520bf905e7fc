from typing import Dict, Tuple

import numpy as np
from pydantic import Field, model_validator

from src.core.exceptions import DimensionMismatchException, EmptyStratumException, LabelMismatchException
from src.schemas.common import FrozenModel
from src.schemas.count_model import CountMatrix


class StratumRecord(FrozenModel):
    state: str
    stratum: str
    readout: str
    count: int = Field(..., description="Number of subjects with this state, stratum and readout")


class StratifiedRecords(FrozenModel):
    """
    Long-format records split by a single stratum label (stage, sex, age band).

    ``strata`` holds one (J+1) x (K+1) grid per stratum label in the label
    order of ``pooled``; the grids add up cell by cell to the pooled table.
    A stratum grid need not be a valid study on its own: stage strata carry
    no controls.
    """

    records: Tuple[StratumRecord, ...]
    pooled: CountMatrix
    strata: Dict[str, Tuple[Tuple[int, ...], ...]]

    @model_validator(mode="after")
    def check_conservation(self) -> "StratifiedRecords":
        shape = self.pooled.array.shape
        total = np.zeros(shape, dtype=np.int64)
        for label, grid in self.strata.items():
            block = np.asarray(grid, dtype=np.int64)
            if block.shape != shape:
                raise DimensionMismatchException(f"Stratum '{label}' grid has shape {block.shape}, expected {shape}")
            total += block
        if not np.array_equal(total, self.pooled.array):
            raise DimensionMismatchException("Stratum tables do not add up to the pooled table")
        return self

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(self.strata)

    def grid(self, label: str) -> np.ndarray:
        if label not in self.strata:
            raise LabelMismatchException(f"Unknown stratum '{label}'")
        return np.asarray(self.strata[label], dtype=np.int64)

    def stratum_matrix(self, label: str, pooled_controls: bool = False) -> CountMatrix:
        """
        The stratum as a CountMatrix. With ``pooled_controls`` the control row
        is taken from the pooled table, which is how disease-stage strata are
        analysed.
        """
        grid = self.grid(label)
        if pooled_controls:
            grid[0] = self.pooled.array[0]
        if grid[1:].sum() == 0:
            raise EmptyStratumException(f"Stratum '{label}' has no cases")
        return CountMatrix(
            state_labels=self.pooled.state_labels,
            readout_labels=self.pooled.readout_labels,
            counts=tuple(tuple(int(c) for c in row) for row in grid),
        )

    def stage_shares(self, j: int) -> Dict[str, float]:
        """P-hat(S = s | D_j) for every stratum s."""
        total = int(self.pooled.row_totals[j])
        if total == 0:
            raise EmptyStratumException(f"State '{self.pooled.state_labels[j]}' has no cases")
        return {label: int(self.grid(label)[j].sum()) / total for label in self.strata}
