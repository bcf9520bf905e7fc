from pydantic import Field, model_validator

from src.schemas.common import FrozenModel


class MarginalParams(FrozenModel):
    """theta_k = (P(T_k|D_0), P(T_k|D)) together with the mixture B0 = P(T_k) and B1 = 1 - B0."""

    readout_index: int = Field(..., ge=0)
    control_rate: float = Field(..., ge=0, le=1)
    case_rate: float = Field(..., ge=0, le=1)
    overall: float = Field(..., gt=0, lt=1)
    B0: float
    B1: float

    @model_validator(mode="after")
    def check_mixture(self) -> "MarginalParams":
        expected = self.control_rate * (1.0 - self.overall) + self.case_rate * self.overall
        if abs(self.B0 - expected) > 1e-12 or abs(self.B0 + self.B1 - 1.0) > 1e-12:
            raise ValueError("B0 must equal the incidence-weighted mixture and B0 + B1 must be 1")
        return self
