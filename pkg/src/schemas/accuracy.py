from typing import Tuple

from pydantic import Field

from src.schemas.common import EstimateInterval, FrozenModel


class TruncatedBinomialMoments(FrozenModel):
    n_trials: int = Field(..., ge=1)
    success_prob: float = Field(..., ge=0, le=1)
    prob_positive: float = Field(..., description="P(n > 0)")
    mean_inverse_given_positive: float = Field(..., description="E(1/n | n > 0)")
    mean_given_positive: float = Field(..., description="E(n | n > 0)")


class AccuracyEstimate(FrozenModel):
    state_index: int = Field(..., ge=1)
    readout_index: int = Field(..., ge=0)
    tilde: float = Field(..., description="Raw conditional proportion n_jk / n_j+ (0/0 = 0)")
    point: float = Field(..., description="Compound-variable estimate tilde / P(n_j+ > 0)")
    prob_positive: float = Field(..., description="Plug-in P(n_j+ > 0)")
    sigma2: float = Field(..., description="Variance of the point estimate")
    logit_variance: float = Field(..., description="Delta-method variance of the logit")
    interval: EstimateInterval


class ControlRates(FrozenModel):
    specificity: EstimateInterval = Field(..., description="A_0 = P(T_0 | D_0)")
    false_positive: Tuple[EstimateInterval, ...] = Field(
        ..., description="beta_k = P(T_k | D_0) for k = 1..K"
    )
