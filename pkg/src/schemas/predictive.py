from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import Field, model_validator

from src.core.enums import IncidenceMode, PredictiveMetric
from src.core.exceptions import DimensionMismatchException, DomainErrorException
from src.schemas.common import EstimateInterval, FrozenModel


class IncidenceSpec(FrozenModel):
    """
    Population incidence used to turn case-control rates into predictive values.

    In ``registry`` mode the per-state shares P(D_j|D) come from an external
    source and are treated as known constants; in ``sample`` mode they are
    estimated from the case block. ``strata`` optionally carries one
    IncidenceSpec per stratum label for stratified analyses.
    """

    overall: float = Field(..., description="P(D), expected cases per person in the intended-use population")
    mode: IncidenceMode = Field(default=IncidenceMode.SAMPLE)
    registry_shares: Optional[Tuple[float, ...]] = Field(default=None, description="P(D_j|D), j = 1..J")
    strata: Optional[Dict[str, "IncidenceSpec"]] = Field(default=None)

    @model_validator(mode="after")
    def check_incidence(self) -> "IncidenceSpec":
        if not (0.0 < self.overall < 1.0):
            raise DomainErrorException(f"overall incidence must lie in (0, 1), got {self.overall}")
        if self.mode == IncidenceMode.REGISTRY:
            if not self.registry_shares:
                raise DomainErrorException("registry mode requires registry_shares")
            if any(s < 0 or s > 1 for s in self.registry_shares):
                raise DomainErrorException("registry shares must lie in [0, 1]")
            if abs(sum(self.registry_shares) - 1.0) > 1e-9:
                raise DomainErrorException(
                    f"registry shares must sum to 1, got {sum(self.registry_shares):.12f}"
                )
        elif self.registry_shares is not None:
            raise DomainErrorException("registry_shares are only allowed in registry mode")
        return self

    @property
    def is_fixed(self) -> bool:
        return self.mode == IncidenceMode.REGISTRY

    def for_stratum(self, label: str) -> "IncidenceSpec":
        """Stratum-specific incidence, falling back to this one."""
        if self.strata and label in self.strata:
            return self.strata[label]
        return self.model_copy(update={"strata": None})


class PhiVector(FrozenModel):
    """
    Parameter vector for readout k, ordered
    [P(T_k|D_0), P(T_k|D_1), ..., P(T_k|D_J), P(D_1|D), ..., P(D_{J-1}|D)].
    """

    readout_index: int = Field(..., ge=0)
    values: Tuple[float, ...]

    @model_validator(mode="after")
    def check_values(self) -> "PhiVector":
        if len(self.values) < 2 or len(self.values) % 2:
            raise DimensionMismatchException(f"phi must have even length 2J, got {len(self.values)}")
        if any(not (0.0 <= v <= 1.0) for v in self.values):
            raise DomainErrorException("phi entries must lie in [0, 1]")
        if sum(self.values[self.J + 1 :]) > 1.0 + 1e-12:
            raise DomainErrorException("free case shares sum to more than 1")
        return self

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def J(self) -> int:
        return len(self.values) // 2

    @property
    def control_rate(self) -> float:
        return self.values[0]

    @property
    def accuracies(self) -> np.ndarray:
        """P(T_k|D_j), j = 1..J."""
        return self.array[1 : self.J + 1]

    @property
    def shares(self) -> np.ndarray:
        """All J shares, the last one closed as 1 minus the free ones."""
        free = self.array[self.J + 1 :]
        return np.append(free, 1.0 - free.sum())


class PhiCovariance(FrozenModel):
    readout_index: int = Field(..., ge=0)
    matrix: Tuple[Tuple[float, ...], ...] = Field(..., description="2J x 2J symmetric covariance of phi-hat")
    fixed_incidence: bool = False

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)


class PredictiveEstimate(FrozenModel):
    readout_index: int = Field(..., ge=0)
    metric: PredictiveMetric
    point: float = Field(..., ge=0, le=1)
    logit_variance: float = Field(..., ge=0)
    interval: EstimateInterval
    incidence_mode: IncidenceMode
    adjusted_controls: bool = False
    stratum: Optional[str] = Field(default=None, description="Stage label for stage-decomposed values")


class BinarySummary(FrozenModel):
    """Classical 2 x 2 summary of a single-disease test."""

    sensitivity: EstimateInterval
    specificity: EstimateInterval
    ppv: PredictiveEstimate
    npv: PredictiveEstimate


IncidenceSpec.model_rebuild()
