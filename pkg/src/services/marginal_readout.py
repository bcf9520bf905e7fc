"""
Marginal readout distribution P(T_k) from the collapsed case-control table.

P(T_k) = P(T_k|D_0)(1 - P(D)) + P(T_k|D) P(D); the case rate comes from the
collapsed case row and P(D) is a fixed constant.
"""

from typing import List, Optional

import numpy as np

from src.core.enums import IntervalFlag
from src.core.exceptions import DomainErrorException, ZeroDenominatorException
from src.schemas.common import EstimateInterval
from src.schemas.count_model import AdjustedControlRow, CollapsedMatrix
from src.schemas.marginal import MarginalParams
from src.services.stat_kernels import resolve_alpha, wald_logit_interval
from src.utils.logger import get_logger

logger = get_logger(__name__)


def marginal_params(
    collapsed: CollapsedMatrix, adjusted: AdjustedControlRow, overall_incidence: float, k: int
) -> MarginalParams:
    if not (0 <= k <= collapsed.K):
        raise DomainErrorException(f"readout index {k} outside 0..{collapsed.K}")
    if not (0.0 < overall_incidence < 1.0):
        raise DomainErrorException(f"overall incidence must lie in (0, 1), got {overall_incidence}")
    control = adjusted.share(k)
    case = collapsed.case_row[k] / collapsed.N1
    b0 = control * (1.0 - overall_incidence) + case * overall_incidence
    return MarginalParams(
        readout_index=k,
        control_rate=control,
        case_rate=case,
        overall=overall_incidence,
        B0=b0,
        B1=1.0 - b0,
    )


def marginal_gradient(params: MarginalParams) -> np.ndarray:
    """Q' = d logit(B0) / d(control_rate, case_rate)."""
    scale = params.B0 * params.B1
    return np.array([(1.0 - params.overall) / scale, params.overall / scale])


def marginal_estimate(
    collapsed: CollapsedMatrix,
    adjusted: AdjustedControlRow,
    overall_incidence: float,
    k: int,
    alpha: Optional[float] = None,
) -> EstimateInterval:
    alpha = resolve_alpha(alpha)
    params = marginal_params(collapsed, adjusted, overall_incidence, k)
    if params.B0 <= 0.0 or params.B0 >= 1.0:
        raise ZeroDenominatorException(f"P(T_{k}) is estimated on the boundary ({params.B0})")

    c, d = params.control_rate, params.case_rate
    covariance = np.diag([c * (1.0 - c) / collapsed.N0, d * (1.0 - d) / collapsed.N1])
    gradient = marginal_gradient(params)
    variance = float(gradient @ covariance @ gradient)

    flags = {IntervalFlag.ADJUSTED_COUNTS} if adjusted.applied else set()
    return wald_logit_interval(params.B0, variance, alpha, flags=flags)


def marginal_table(
    collapsed: CollapsedMatrix,
    adjusted: AdjustedControlRow,
    overall_incidence: float,
    alpha: Optional[float] = None,
) -> List[EstimateInterval]:
    table = [marginal_estimate(collapsed, adjusted, overall_incidence, k, alpha) for k in range(collapsed.K + 1)]
    logger.debug(f"Marginal readout distribution: {[round(m.point, 6) for m in table]}")
    return table
