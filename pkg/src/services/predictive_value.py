"""
Predictive values PVP_k and PVN_k under case-control sampling.

For readout k the parameters are collected in

    phi_k = [P(T_k|D_0), P(T_k|D_1), ..., P(T_k|D_J), P(D_1|D), ..., P(D_{J-1}|D)]

with P(D_J|D) closed as one minus the free shares. Intervals are Wald
intervals for the logit of the predictive value, whose variance is the
delta-method form g' V g with g the analytic gradient and V the block
covariance of phi-hat.
"""

from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import settings
from src.core.enums import AdjustPolicy, IncidenceMode, IntervalFlag, IntervalMethod, PredictiveMetric
from src.core.exceptions import DimensionMismatchException, DomainErrorException, ZeroDenominatorException
from src.schemas.accuracy import AccuracyEstimate
from src.schemas.common import EstimateInterval
from src.schemas.count_model import AdjustedControlRow, CaseShareVector, CountMatrix
from src.schemas.predictive import BinarySummary, IncidenceSpec, PhiCovariance, PhiVector, PredictiveEstimate
from src.services.count_model import adjust_control_counts, case_shares
from src.services.intrinsic_accuracy import accuracy_estimate, accuracy_variances, control_rates
from src.services.stat_kernels import resolve_alpha, truncated_moments, wald_logit_interval
from src.utils.logger import get_logger

logger = get_logger(__name__)


def effective_shares(shares: CaseShareVector, incidence: IncidenceSpec, n_states: int) -> CaseShareVector:
    """Sample shares, or the registry shares when incidence is fixed."""
    if incidence.mode == IncidenceMode.REGISTRY:
        if len(incidence.registry_shares) != n_states:
            raise DimensionMismatchException(
                f"registry_shares has {len(incidence.registry_shares)} entries, expected {n_states}"
            )
        return CaseShareVector(shares=incidence.registry_shares, basis=0)
    if len(shares.shares) != n_states:
        raise DimensionMismatchException(f"case shares have {len(shares.shares)} entries, expected {n_states}")
    return shares


def accuracy_column(
    matrix: CountMatrix, shares: CaseShareVector, k: int, alpha: Optional[float] = None
) -> List[AccuracyEstimate]:
    """A-hat_jk for every case state j and a fixed readout k."""
    return [accuracy_estimate(matrix, j, k, shares, alpha) for j in range(1, matrix.J + 1)]


def build_phi(
    matrix: CountMatrix,
    adjusted: AdjustedControlRow,
    shares: CaseShareVector,
    incidence: IncidenceSpec,
    k: int,
    column: Optional[Sequence[AccuracyEstimate]] = None,
) -> PhiVector:
    if not (0 <= k <= matrix.K):
        raise DomainErrorException(f"readout index {k} outside 0..{matrix.K}")
    shares = effective_shares(shares, incidence, matrix.J)
    column = column or accuracy_column(matrix, shares, k)
    values = [adjusted.share(k)] + [a.point for a in column] + list(shares.shares[:-1])
    return PhiVector(readout_index=k, values=tuple(float(v) for v in values))


def readout_terms(phi: PhiVector, overall: float) -> Tuple[float, np.ndarray, float]:
    """Control term beta (1 - P(D)), per-state case terms P(D) A_j p_j and the full denominator P(T_k)."""
    control = phi.control_rate * (1.0 - overall)
    cases = overall * phi.accuracies * phi.shares
    return control, cases, control + float(cases.sum())


def pvp_point(phi: PhiVector, incidence: IncidenceSpec, k: int) -> float:
    if not (1 <= k <= phi.J):
        raise DomainErrorException(f"PVP needs a positive readout, got k={k}")
    _, cases, denominator = readout_terms(phi, incidence.overall)
    if denominator <= 0.0:
        raise ZeroDenominatorException(f"Readout {k} has zero estimated probability")
    return min(float(cases[k - 1]) / denominator, 1.0)


def pvn_point(phi: PhiVector, incidence: IncidenceSpec, k: int) -> float:
    control, _, denominator = readout_terms(phi, incidence.overall)
    if denominator <= 0.0:
        raise ZeroDenominatorException(f"Readout {k} has zero estimated probability")
    return min(control / denominator, 1.0)


def cross_terms(phi: PhiVector, incidence: IncidenceSpec, k: int) -> np.ndarray:
    """P(D_j|T_k) for every case state j; for k >= 1 entry k-1 is PVP_k."""
    _, cases, denominator = readout_terms(phi, incidence.overall)
    if denominator <= 0.0:
        raise ZeroDenominatorException(f"Readout {k} has zero estimated probability")
    return cases / denominator


def _share_derivative(values: np.ndarray, J: int) -> np.ndarray:
    """d(sum_j x_j p_j)/dp_l for l = 1..J-1, with p_J = 1 - sum of the free shares."""
    return values[: J - 1] - values[J - 1]


def gradient_u(phi: PhiVector, incidence: IncidenceSpec, k: int) -> np.ndarray:
    """
    Gradient of U = log{num / (den - num)} = logit(PVP_k) with respect to phi.

    num = P(D) A_kk p_k and R_U = den - num = beta (1 - P(D)) + P(D) sum_{j != k} A_jk p_j.
    """
    if not (1 <= k <= phi.J):
        raise DomainErrorException(f"PVP needs a positive readout, got k={k}")
    J, P = phi.J, incidence.overall
    accuracies, shares = phi.accuracies, phi.shares
    control, cases, denominator = readout_terms(phi, P)
    numerator = float(cases[k - 1])
    remainder = denominator - numerator
    if numerator <= 0.0 or remainder <= 0.0:
        raise DomainErrorException(f"logit(PVP_{k}) is unbounded at this phi")

    grad = np.zeros(2 * J)
    grad[0] = -(1.0 - P) / remainder
    others = -P * shares / remainder
    others[k - 1] = 1.0 / accuracies[k - 1]
    grad[1 : J + 1] = others

    if J > 1:
        own = np.zeros(J)
        own[k - 1] = 1.0 / shares[k - 1]
        rest = accuracies.copy()
        rest[k - 1] = 0.0
        grad[J + 1 :] = _share_derivative(own, J) - P * _share_derivative(rest, J) / remainder

    if incidence.is_fixed:
        grad[J + 1 :] = 0.0
    return grad


def gradient_w(phi: PhiVector, incidence: IncidenceSpec, k: int) -> np.ndarray:
    """
    Gradient of W = log{beta'_k (1 - P(D)) / R_W} = logit(PVN_k), where
    R_W = P(D) sum_j A_jk p_j.
    """
    J, P = phi.J, incidence.overall
    control, cases, _ = readout_terms(phi, P)
    remainder = float(cases.sum())
    if control <= 0.0 or remainder <= 0.0:
        raise DomainErrorException(f"logit(PVN_{k}) is unbounded at this phi")

    grad = np.zeros(2 * J)
    grad[0] = 1.0 / phi.control_rate
    grad[1 : J + 1] = -P * phi.shares / remainder
    if J > 1 and not incidence.is_fixed:
        grad[J + 1 :] = -P * _share_derivative(phi.accuracies, J) / remainder
    return grad


def phi_covariance(
    matrix: CountMatrix,
    adjusted: AdjustedControlRow,
    shares: CaseShareVector,
    incidence: IncidenceSpec,
    k: int,
    accuracy_row: Sequence[float],
    phi: Optional[PhiVector] = None,
) -> PhiCovariance:
    """
    Covariance of phi-hat for readout k.

    (0, 0) holds beta_k (1 - beta_k) / N0 and the accuracy block the sigma2_jk.
    The accuracy-share block carries eta_jj = A_jk p_j (1 / P(n_j+ > 0) - 1)
    on its diagonal and the share block is the multinomial (diag(v) - v v') / N1.
    With fixed incidence both share-related blocks vanish.
    """
    J = matrix.J
    if len(accuracy_row) != J:
        raise DimensionMismatchException(f"accuracy_row has {len(accuracy_row)} entries, expected {J}")
    shares = effective_shares(shares, incidence, J)
    phi = phi or build_phi(matrix, adjusted, shares, incidence, k)

    cov = np.zeros((2 * J, 2 * J))
    beta = phi.control_rate
    cov[0, 0] = beta * (1.0 - beta) / matrix.N0
    cov[1 : J + 1, 1 : J + 1] = np.diag(np.asarray(accuracy_row, dtype=float))

    if not incidence.is_fixed and J > 1:
        n1 = matrix.N1
        free = shares.array[:-1]
        for j in range(1, J):
            p_j = free[j - 1]
            if p_j <= 0.0:
                continue
            positive = truncated_moments(n1, p_j).prob_positive
            eta = phi.accuracies[j - 1] * p_j * (1.0 / positive - 1.0)
            cov[j, J + j] = cov[J + j, j] = eta
        cov[J + 1 :, J + 1 :] = (np.diag(free) - np.outer(free, free)) / n1

    return PhiCovariance(
        readout_index=k,
        matrix=tuple(tuple(float(c) for c in row) for row in cov),
        fixed_incidence=incidence.is_fixed,
    )


def _logit_variance(gradient: np.ndarray, covariance: np.ndarray) -> float:
    return max(float(gradient @ covariance @ gradient), 0.0)


def _has_boundary_rate(phi: PhiVector, column: Sequence[AccuracyEstimate]) -> bool:
    """True when beta_k or some estimable A_jk sits on 0 or 1."""
    if phi.control_rate in (0.0, 1.0):
        return True
    return any(a.point in (0.0, 1.0) and a.interval.method != IntervalMethod.DEGENERATE for a in column)


def _half_adjusted_inputs(
    matrix: CountMatrix,
    adjusted: AdjustedControlRow,
    shares: CaseShareVector,
    phi: PhiVector,
    k: int,
) -> Tuple[PhiVector, AdjustedControlRow, List[float]]:
    """
    phi with every boundary rate replaced by its half-adjusted counterpart,
    together with the matching control row and accuracy variances.
    """
    K = matrix.K
    values = list(phi.values)
    if phi.control_rate in (0.0, 1.0):
        adjusted = adjust_control_counts(matrix, AdjustPolicy.ON)
        values[0] = adjusted.share(k)

    sigma2 = []
    for j in range(1, matrix.J + 1):
        row = matrix.counts[j]
        n_j, p_j = sum(row), shares.shares[j - 1]
        if n_j == 0 or p_j <= 0.0:
            sigma2.append(0.0)
            continue
        moments = truncated_moments(matrix.N1, p_j)
        point = values[j]
        if point in (0.0, 1.0):
            tilde = (row[k] + 0.5) / (n_j + 0.5 * (K + 1))
            point = tilde / moments.prob_positive
            if point >= 1.0:
                point = tilde
            values[j] = point
        sigma2.append(accuracy_variances(point, moments.prob_positive, moments.mean_inverse_given_positive)[0])

    return PhiVector(readout_index=k, values=tuple(values)), adjusted, sigma2


def predictive_estimate(
    matrix: CountMatrix,
    adjusted: AdjustedControlRow,
    shares: CaseShareVector,
    incidence: IncidenceSpec,
    k: int,
    metric: PredictiveMetric,
    alpha: Optional[float] = None,
) -> PredictiveEstimate:
    """
    PVP_k or PVN_k with a logit-scale Wald interval.

    When the point sits on 0 or 1 the logit is unbounded; the interval is
    then taken from phi with its boundary rates half-adjusted and widened
    to contain the reported point. An interior point whose phi still holds
    a rate on 0 or 1 keeps its centre, but its covariance is rebuilt from
    the half-adjusted rates and the interval is flagged.
    """
    alpha = resolve_alpha(alpha)
    metric = PredictiveMetric(metric)
    if metric == PredictiveMetric.PVP and k < 1:
        raise DomainErrorException("PVP is defined for positive readouts only")
    shares = effective_shares(shares, incidence, matrix.J)
    column = accuracy_column(matrix, shares, k, alpha)
    phi = build_phi(matrix, adjusted, shares, incidence, k, column=column)

    point_of = pvp_point if metric == PredictiveMetric.PVP else pvn_point
    gradient_of = gradient_u if metric == PredictiveMetric.PVP else gradient_w
    point = point_of(phi, incidence, k)

    flags = set()
    if incidence.is_fixed:
        flags.add(IntervalFlag.FIXED_INCIDENCE)
    if adjusted.applied:
        flags.add(IntervalFlag.ADJUSTED_COUNTS)

    if 0.0 < point < 1.0:
        gradient = gradient_of(phi, incidence, k)
        covariance = phi_covariance(matrix, adjusted, shares, incidence, k, [a.sigma2 for a in column], phi=phi)
        variance = _logit_variance(gradient, covariance.array)
        if _has_boundary_rate(phi, column):
            # zero-variance entries of V would understate the spread; take V from half-adjusted rates
            fixed_phi, fixed_adjusted, sigma2 = _half_adjusted_inputs(matrix, adjusted, shares, phi, k)
            fixed = phi_covariance(matrix, fixed_adjusted, shares, incidence, k, sigma2, phi=fixed_phi)
            variance = max(variance, _logit_variance(gradient, fixed.array))
            interval = wald_logit_interval(point, variance, alpha, flags=flags).with_flags(
                IntervalFlag.DEGENERATE_PROPORTION
            )
            logger.debug(f"Readout {k}: boundary rate in phi, covariance from half-adjusted counts")
        else:
            interval = wald_logit_interval(point, variance, alpha, flags=flags)
    else:
        variance, interval = _fallback_interval(
            matrix, adjusted, shares, incidence, k, phi, point, point_of, gradient_of, alpha, flags
        )

    logger.debug(f"{metric.value.upper()}_{k} = {point:.6f} [{interval.lower:.6f}, {interval.upper:.6f}]")
    return PredictiveEstimate(
        readout_index=k,
        metric=metric,
        point=point,
        logit_variance=variance,
        interval=interval,
        incidence_mode=incidence.mode,
        adjusted_controls=adjusted.applied,
    )


def _fallback_interval(
    matrix: CountMatrix,
    adjusted: AdjustedControlRow,
    shares: CaseShareVector,
    incidence: IncidenceSpec,
    k: int,
    phi: PhiVector,
    point: float,
    point_of: Callable[[PhiVector, IncidenceSpec, int], float],
    gradient_of: Callable[[PhiVector, IncidenceSpec, int], np.ndarray],
    alpha: float,
    flags: set,
) -> Tuple[float, EstimateInterval]:
    flags = set(flags) | {IntervalFlag.DEGENERATE_PROPORTION}
    fixed_phi, fixed_adjusted, sigma2 = _half_adjusted_inputs(matrix, adjusted, shares, phi, k)
    try:
        center = point_of(fixed_phi, incidence, k)
    except ZeroDenominatorException:
        center = point
    if not (0.0 < center < 1.0):
        logger.warning(f"Readout {k}: no informative interval even after half adjustment")
        interval = EstimateInterval(
            point=point, lower=0.0, upper=1.0, alpha=alpha, method=IntervalMethod.DEGENERATE, flags=frozenset(flags)
        )
        return 0.0, interval

    covariance = phi_covariance(matrix, fixed_adjusted, shares, incidence, k, sigma2, phi=fixed_phi)
    variance = _logit_variance(gradient_of(fixed_phi, incidence, k), covariance.array)
    base = wald_logit_interval(center, variance, alpha)
    interval = EstimateInterval(
        point=point,
        lower=min(base.lower, point),
        upper=max(base.upper, point),
        alpha=alpha,
        method=IntervalMethod.LOGIT_WALD,
        flags=frozenset(flags | {IntervalFlag.ADJUSTED_COUNTS}),
    )
    logger.warning(f"Readout {k}: boundary point {point:.4f}, interval from half-adjusted counts")
    return variance, interval


def overall_pvp_point(
    matrix: CountMatrix,
    adjusted: AdjustedControlRow,
    shares: CaseShareVector,
    incidence: IncidenceSpec,
) -> float:
    """PVP* = sum_k num_k / sum_k P(T_k) over the positive readouts."""
    shares = effective_shares(shares, incidence, matrix.J)
    numerator = denominator = 0.0
    for k in range(1, matrix.K + 1):
        phi = build_phi(matrix, adjusted, shares, incidence, k)
        _, cases, total = readout_terms(phi, incidence.overall)
        numerator += float(cases[k - 1])
        denominator += total
    if denominator <= 0.0:
        raise ZeroDenominatorException("No positive readout has positive estimated probability")
    return numerator / denominator


def binary_summary(
    matrix: CountMatrix, incidence: IncidenceSpec, alpha: Optional[float] = None, adjust_policy=None
) -> BinarySummary:
    """Sensitivity, specificity, PPV and NPV of a single-disease test (J = K = 1)."""
    if matrix.J != 1 or matrix.K != 1:
        raise DimensionMismatchException(f"binary summary needs a 2 x 2 table, got {matrix.J + 1} x {matrix.K + 1}")
    alpha = resolve_alpha(alpha)
    adjusted = adjust_control_counts(matrix, adjust_policy or settings.ADJUST_POLICY)
    shares = case_shares(matrix)
    return BinarySummary(
        sensitivity=accuracy_estimate(matrix, 1, 1, effective_shares(shares, incidence, 1), alpha).interval,
        specificity=control_rates(matrix, adjusted, alpha).specificity,
        ppv=predictive_estimate(matrix, adjusted, shares, incidence, 1, PredictiveMetric.PVP, alpha),
        npv=predictive_estimate(matrix, adjusted, shares, incidence, 0, PredictiveMetric.PVN, alpha),
    )
