from enum import Enum


class BaseEnum(str, Enum):
    def __str__(self) -> str:
        return str.__str__(self)


class AdjustPolicy(BaseEnum):
    AUTO = "auto"
    ON = "on"
    OFF = "off"


class IncidenceMode(BaseEnum):
    # P(D_j|D) estimated from the case block, random
    SAMPLE = "sample"
    # P(D_j|D) fixed from a registry or large population study
    REGISTRY = "registry"


class IntervalMethod(BaseEnum):
    MIDP = "midp"
    LOGIT_WALD = "logit_wald"
    DEGENERATE = "degenerate"


class PredictiveMetric(BaseEnum):
    PVP = "pvp"
    PVN = "pvn"


class IntervalFlag(BaseEnum):
    ADJUSTED_COUNTS = "adjusted_counts"
    RAW_COUNT_INTERVAL = "raw_count_interval"
    FIXED_INCIDENCE = "fixed_incidence"
    DEGENERATE_PROPORTION = "degenerate_proportion"
    EMPTY_ROW = "empty_row"
    CLIPPED = "clipped"
    BLOCK_DIAGONAL_STAGE_COVARIANCE = "block_diagonal_stage_covariance"
