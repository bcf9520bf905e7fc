from typing import Dict, Optional, Tuple

from pydantic import Field, computed_field, model_validator

from src.core.enums import AdjustPolicy, IncidenceMode
from src.schemas.common import EstimateInterval, FrozenModel
from src.schemas.predictive import PredictiveEstimate


class LabeledInterval(FrozenModel):
    label: str
    interval: EstimateInterval


class StateAccuracyBlock(FrozenModel):
    state: str
    cases: int = Field(..., ge=0, description="n_j+")
    false_negative: Optional[EstimateInterval] = None
    crude_sensitivity: Optional[EstimateInterval] = None
    accuracy: Optional[EstimateInterval] = Field(
        default=None, description="A_j = P(T_j|D_j); absent for states without a readout of their own"
    )


class ControlBlock(FrozenModel):
    controls: int = Field(..., ge=1, description="N0")
    specificity: EstimateInterval
    false_positive: Tuple[LabeledInterval, ...]


class PredictiveBlock(FrozenModel):
    readout: str
    marginal: Optional[EstimateInterval] = Field(default=None, description="P(T_k)")
    pvp: Optional[PredictiveEstimate] = Field(default=None, description="Absent for the Negative readout")
    pvn: Optional[PredictiveEstimate] = None


class Provenance(FrozenModel):
    version: str
    alpha: float
    adjust_policy: AdjustPolicy
    adjustment_applied: bool
    incidence_mode: IncidenceMode
    overall_incidence: float
    input_digests: Dict[str, str] = Field(default_factory=dict, description="SHA-256 of every input file")

    @model_validator(mode="after")
    def check_non_empty(self) -> "Provenance":
        if not self.version:
            raise ValueError("provenance needs a version")
        return self


class AnalysisReport(FrozenModel):
    """Everything ``analyze`` computes for one count table."""

    stratum: Optional[str] = None
    state_labels: Tuple[str, ...]
    readout_labels: Tuple[str, ...]
    states: Tuple[StateAccuracyBlock, ...]
    control: ControlBlock
    predictive: Tuple[PredictiveBlock, ...]
    aggregate_accuracy: Optional[float] = None
    overall_pvp: Optional[float] = Field(default=None, description="PVP* over all positive readouts, point only")
    provenance: Provenance
    errors: Dict[str, str] = Field(default_factory=dict, description="Metric id -> reason it was not computed")

    def state_block(self, label: str) -> Optional[StateAccuracyBlock]:
        return next((s for s in self.states if s.state == label), None)

    def predictive_block(self, label: str) -> Optional[PredictiveBlock]:
        return next((p for p in self.predictive if p.readout == label), None)


class StageAccuracyRow(FrozenModel):
    state: str
    stage: str
    accuracy: EstimateInterval


class StageValueRow(FrozenModel):
    readout: str
    stage: str
    stage_share: float = Field(..., ge=0, le=1, description="P-hat(S = stage | D_k)")
    pvp: PredictiveEstimate


class StratifiedReport(FrozenModel):
    pooled: AnalysisReport
    strata: Dict[str, AnalysisReport] = Field(default_factory=dict)
    stage_values: Tuple[StageValueRow, ...] = ()
    stage_accuracy: Tuple[StageAccuracyRow, ...] = ()
    errors: Dict[str, str] = Field(default_factory=dict)


class CostBenefitPoint(FrozenModel):
    readout: str
    benefit: float = Field(..., ge=0, le=1, description="Intrinsic accuracy IA(k)")
    cost: float = Field(..., ge=0, le=1, description="1 - PVP(k)")

    @computed_field
    @property
    def in_target_region(self) -> bool:
        return self.benefit >= 0.5 and self.cost <= 0.5
