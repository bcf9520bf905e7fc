from typing import FrozenSet

from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator

from src.core.enums import IntervalFlag, IntervalMethod


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class EstimateInterval(FrozenModel):
    point: float = Field(..., description="Point estimate on the probability scale")
    lower: float = Field(..., description="Lower confidence bound")
    upper: float = Field(..., description="Upper confidence bound")
    alpha: float = Field(..., gt=0, lt=1, description="Two-sided error rate")
    method: IntervalMethod = Field(..., description="How the bounds were obtained")
    flags: FrozenSet[IntervalFlag] = Field(default=frozenset(), description="Provenance markers")

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "point": 0.2222,
                "lower": 0.114,
                "upper": 0.388,
                "alpha": 0.05,
                "method": "logit_wald",
                "flags": [],
            }
        },
    )

    @model_validator(mode="after")
    def check_order(self) -> "EstimateInterval":
        if self.method != IntervalMethod.DEGENERATE:
            eps = 1e-12
            if not (-eps <= self.lower <= self.point + eps <= self.upper + 2 * eps <= 1 + 3 * eps):
                raise ValueError(
                    f"interval must satisfy 0 <= lower <= point <= upper <= 1, "
                    f"got ({self.lower}, {self.point}, {self.upper})"
                )
        return self

    @field_serializer("flags")
    def serialize_flags(self, flags: FrozenSet[IntervalFlag]) -> list:
        return sorted(str(f) for f in flags)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def with_flags(self, *flags: IntervalFlag) -> "EstimateInterval":
        return self.model_copy(update={"flags": self.flags | frozenset(flags)})
