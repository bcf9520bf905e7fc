"""
Intrinsic accuracy of a multi-category test from case-control counts.

The number of cases of state j, n_j+, is itself random, so the raw row
proportion n_jk / n_j+ is a compound random variable whose expectation is
P(T_k|D_j) P(n_j+ > 0). Dividing by the plug-in P(n_j+ > 0) removes that
bias; variances treat P(n_j+ > 0) as a fixed constant.
"""

from typing import Optional, Tuple

from src.core.enums import IntervalFlag, IntervalMethod
from src.core.exceptions import DomainErrorException, EmptyCaseBlockException
from src.schemas.accuracy import AccuracyEstimate, ControlRates
from src.schemas.common import EstimateInterval
from src.schemas.count_model import AdjustedControlRow, CaseShareVector, CountMatrix
from src.services.stat_kernels import (
    midp_interval,
    prob_positive,
    resolve_alpha,
    truncated_moments,
    wald_logit_interval,
)
from src.utils.logger import get_logger

logger = get_logger(__name__)


def accuracy_variances(point: float, positive: float, mean_inverse: float) -> Tuple[float, float]:
    """
    Variance of the accuracy estimate and the delta-method variance of its logit.

    sigma2 = [A^2 (1 - P) + A (1 - A) E(1/n | n > 0)] / P
    V{L}   = P [A (1 - P) + (1 - A) E(1/n | n > 0)] / (A (1 - A)^2)
    """
    sigma2 = (point**2 * (1.0 - positive) + point * (1.0 - point) * mean_inverse) / positive
    if point <= 0.0 or point >= 1.0:
        return sigma2, float("inf")
    logit_variance = positive * (point * (1.0 - positive) + (1.0 - point) * mean_inverse)
    logit_variance /= point * (1.0 - point) ** 2
    return sigma2, logit_variance


def accuracy_estimate(
    matrix: CountMatrix,
    j: int,
    k: int,
    shares: CaseShareVector,
    alpha: Optional[float] = None,
) -> AccuracyEstimate:
    """
    Estimate A_jk = P(T_k|D_j) with a logit-scale Wald interval.

    A cell equal to 0 or to the whole row has no logit. The interval is then
    rebuilt from that row with one half added to every cell, widened to
    contain the reported point, and flagged. An empty row gives tilde = 0
    and the uninformative interval [0, 1].
    """
    alpha = resolve_alpha(alpha)
    if not (1 <= j <= matrix.J) or not (0 <= k <= matrix.K):
        raise DomainErrorException(f"cell ({j}, {k}) is outside the case block")

    row = matrix.counts[j]
    n_jk, n_j = row[k], sum(row)
    p_j = shares.shares[j - 1]
    n_trials = matrix.N1

    if n_j == 0:
        logger.warning(f"State '{matrix.state_labels[j]}' has no cases, accuracy is uninformative")
        return AccuracyEstimate(
            state_index=j,
            readout_index=k,
            tilde=0.0,
            point=0.0,
            prob_positive=prob_positive(n_trials, p_j),
            sigma2=0.0,
            logit_variance=0.0,
            interval=EstimateInterval(
                point=0.0,
                lower=0.0,
                upper=1.0,
                alpha=alpha,
                method=IntervalMethod.DEGENERATE,
                flags=frozenset({IntervalFlag.EMPTY_ROW}),
            ),
        )

    moments = truncated_moments(n_trials, p_j)
    positive = moments.prob_positive
    if positive <= 0.0:
        raise DomainErrorException(f"P(n_j+ > 0) is zero for state '{matrix.state_labels[j]}'")

    tilde = n_jk / n_j
    point = tilde / positive
    flags = set()
    if point > 1.0:
        point = 1.0
        flags.add(IntervalFlag.CLIPPED)

    mean_inverse = moments.mean_inverse_given_positive
    sigma2, logit_variance = accuracy_variances(point, positive, mean_inverse)

    if 0.0 < point < 1.0:
        interval = wald_logit_interval(point, logit_variance, alpha, flags=flags)
    else:
        interval, logit_variance = _adjusted_row_interval(
            n_jk, n_j, matrix.K, point, positive, mean_inverse, alpha, flags
        )
        logger.debug(
            f"Degenerate A[{matrix.state_labels[j]}, {matrix.readout_labels[k]}] = {point:.4f}, "
            f"interval from half-adjusted row"
        )

    return AccuracyEstimate(
        state_index=j,
        readout_index=k,
        tilde=tilde,
        point=point,
        prob_positive=positive,
        sigma2=sigma2,
        logit_variance=logit_variance,
        interval=interval,
    )


def _adjusted_row_interval(
    n_jk: int,
    n_j: int,
    n_readouts: int,
    point: float,
    positive: float,
    mean_inverse: float,
    alpha: float,
    flags: set,
) -> Tuple[EstimateInterval, float]:
    """Interval from the row with one half added to each of its K+1 cells; returns it with its logit variance."""
    tilde_adj = (n_jk + 0.5) / (n_j + 0.5 * (n_readouts + 1))
    center = tilde_adj / positive
    if center >= 1.0:
        center = tilde_adj
    _, variance = accuracy_variances(center, positive, mean_inverse)
    adjusted = wald_logit_interval(center, variance, alpha)
    interval = EstimateInterval(
        point=point,
        lower=min(adjusted.lower, point),
        upper=max(adjusted.upper, point),
        alpha=alpha,
        method=IntervalMethod.LOGIT_WALD,
        flags=frozenset(flags) | {IntervalFlag.ADJUSTED_COUNTS, IntervalFlag.DEGENERATE_PROPORTION},
    )
    return interval, variance


def false_negative_estimate(
    matrix: CountMatrix, j: int, shares: CaseShareVector, alpha: Optional[float] = None
) -> AccuracyEstimate:
    """A_j^0, the probability that a case of state j reads Negative."""
    return accuracy_estimate(matrix, j, 0, shares, alpha)


def crude_sensitivity(
    matrix: CountMatrix, j: int, shares: CaseShareVector, alpha: Optional[float] = None
) -> EstimateInterval:
    """1 - A_j^0 with the false-negative interval reflected."""
    negative = false_negative_estimate(matrix, j, shares, alpha).interval
    return EstimateInterval(
        point=1.0 - negative.point,
        lower=1.0 - negative.upper,
        upper=1.0 - negative.lower,
        alpha=negative.alpha,
        method=negative.method,
        flags=negative.flags,
    )


def control_rates(
    matrix: CountMatrix, adjusted: AdjustedControlRow, alpha: Optional[float] = None
) -> ControlRates:
    """
    Specificity A_0 and false-positive rates beta_k with Mid-P intervals.

    Mid-P needs integer counts, so the bounds always come from the raw
    control row; with the half adjustment in force the points are the
    adjusted shares and the intervals are widened to contain them.
    """
    alpha = resolve_alpha(alpha)
    n0 = matrix.N0
    rates = []
    for k, count in enumerate(matrix.counts[0]):
        interval = midp_interval(count, n0, alpha)
        if adjusted.applied:
            share = adjusted.share(k)
            interval = EstimateInterval(
                point=share,
                lower=min(interval.lower, share),
                upper=max(interval.upper, share),
                alpha=alpha,
                method=IntervalMethod.MIDP,
                flags=frozenset({IntervalFlag.ADJUSTED_COUNTS, IntervalFlag.RAW_COUNT_INTERVAL}),
            )
        rates.append(interval)
    return ControlRates(specificity=rates[0], false_positive=tuple(rates[1:]))


def aggregate_accuracy(matrix: CountMatrix) -> float:
    """Share of readout-bearing cases given their own readout; a point summary only."""
    cases = matrix.array[1 : matrix.K + 1]
    total = int(cases.sum())
    if total == 0:
        raise EmptyCaseBlockException("No cases among the states that have a readout")
    hits = sum(int(matrix.counts[j][j]) for j in range(1, matrix.K + 1))
    return hits / total
