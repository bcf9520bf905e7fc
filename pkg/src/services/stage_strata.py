"""
Stratified analyses and the stage decomposition of PVP_k.

For a stage s0 of cancer k

    PVP_k^(s0) = P(T_k|D_k, S=s0) P(S=s0|D_k) P(D_k|D) P(D) / P(T_k)

with the same denominator as the pooled PVP_k, so the stage values add up
to PVP_k. Stage accuracies are scaled by the pooled P(n_k+ > 0).
"""

from collections import OrderedDict
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy import special

from src.core.enums import IntervalFlag, IntervalMethod, PredictiveMetric
from src.core.exceptions import (
    DimensionMismatchException,
    DomainErrorException,
    EmptyStratumException,
    LabelMismatchException,
    NegativeCountException,
    ZeroDenominatorException,
)
from src.schemas.accuracy import AccuracyEstimate
from src.schemas.common import EstimateInterval
from src.schemas.count_model import AdjustedControlRow, CountMatrix
from src.schemas.predictive import IncidenceSpec, PredictiveEstimate
from src.schemas.strata import StratifiedRecords, StratumRecord
from src.services.count_model import case_shares
from src.services.intrinsic_accuracy import accuracy_estimate
from src.services.predictive_value import (
    accuracy_column,
    build_phi,
    effective_shares,
    phi_covariance,
    readout_terms,
)
from src.services.stat_kernels import numerical_gradient, resolve_alpha, wald_logit_interval
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _ordered_labels(records: List[StratumRecord]):
    states = list(OrderedDict.fromkeys(r.state for r in records))
    readouts = list(OrderedDict.fromkeys(r.readout for r in records))
    negatives = [label for label in readouts if label not in states]
    if len(negatives) != 1:
        raise LabelMismatchException(
            f"Exactly one readout must name no disease state (the Negative readout), got {negatives or 'none'}"
        )
    control = states[0]
    if control in readouts:
        raise LabelMismatchException(f"Control state '{control}' cannot also be a readout")
    with_readout = [s for s in states[1:] if s in readouts]
    without_readout = [s for s in states[1:] if s not in readouts]
    return [control] + with_readout + without_readout, negatives + with_readout


def partition_by_stratum(records: Iterable[StratumRecord]) -> StratifiedRecords:
    """
    Build per-stratum tables and the pooled table from long-format records.

    The first record names the control state; the readout that names no
    state is the Negative readout. Remaining states are ordered so that those
    with a readout of their own come first, in order of appearance.
    """
    records = list(records)
    if not records:
        raise DimensionMismatchException("No records to partition")
    if any(r.count < 0 for r in records):
        raise NegativeCountException("Stratified records contain a negative count")

    state_labels, readout_labels = _ordered_labels(records)
    rows = {label: i for i, label in enumerate(state_labels)}
    cols = {label: i for i, label in enumerate(readout_labels)}
    shape = (len(state_labels), len(readout_labels))

    grids = OrderedDict()
    for r in records:
        grid = grids.setdefault(r.stratum, np.zeros(shape, dtype=np.int64))
        grid[rows[r.state], cols[r.readout]] += r.count

    pooled = sum(grids.values())
    matrix = CountMatrix(
        state_labels=tuple(state_labels),
        readout_labels=tuple(readout_labels),
        counts=tuple(tuple(int(c) for c in row) for row in pooled),
    )
    logger.debug(f"Partitioned {len(records)} records into {len(grids)} strata, N={matrix.N}")
    return StratifiedRecords(
        records=tuple(records),
        pooled=matrix,
        strata={label: tuple(tuple(int(c) for c in row) for row in grid) for label, grid in grids.items()},
    )


def stage_accuracy(
    stratified: StratifiedRecords, j: int, k: int, stratum: str, alpha: Optional[float] = None
) -> AccuracyEstimate:
    """P(T_k|D_j, S = s): the stage's case rows analysed as a case block of their own."""
    matrix = stratified.stratum_matrix(stratum, pooled_controls=True)
    return accuracy_estimate(matrix, j, k, case_shares(matrix), alpha)


def _stage_split(stratified: StratifiedRecords, k: int, s0: str):
    """Raw stage accuracies (in s0, outside s0) and the stage share q for state k."""
    pooled = stratified.pooled
    row_total = int(pooled.row_totals[k])
    inside = stratified.grid(s0)[k]
    n_in, hit_in = int(inside.sum()), int(inside[k])
    if row_total == 0 or n_in == 0:
        raise EmptyStratumException(f"State '{pooled.state_labels[k]}' has no cases in stratum '{s0}'")
    n_out, hit_out = row_total - n_in, int(pooled.counts[k][k]) - hit_in
    q = n_in / row_total
    tilde_in = hit_in / n_in
    tilde_out = hit_out / n_out if n_out else 0.0
    return tilde_in, tilde_out, q, n_in, n_out, row_total


def stage_pvp_estimate(
    stratified: StratifiedRecords,
    adjusted: AdjustedControlRow,
    incidence: IncidenceSpec,
    k: int,
    s0: str,
    alpha: Optional[float] = None,
) -> PredictiveEstimate:
    """
    PVP_k^(s0) with a logit-scale Wald interval.

    psi = (phi_k without A_kk, a0, a1, q): stage accuracies inside and outside
    s0 and the stage share. The gradient of Z = logit(PVP_k^(s0)) is taken by
    central differences and the covariance of psi-hat is block diagonal.
    """
    alpha = resolve_alpha(alpha)
    pooled = stratified.pooled
    if not (1 <= k <= pooled.K):
        raise DomainErrorException(f"PVP needs a positive readout, got k={k}")

    shares = effective_shares(case_shares(pooled), incidence, pooled.J)
    column = accuracy_column(pooled, shares, k, alpha)
    phi = build_phi(pooled, adjusted, shares, incidence, k, column=column)
    positive = column[k - 1].prob_positive

    tilde_in, tilde_out, q, n_in, n_out, row_total = _stage_split(stratified, k, s0)
    a0, a1 = tilde_in / positive, tilde_out / positive

    _, cases, denominator = readout_terms(phi, incidence.overall)
    if denominator <= 0.0:
        raise ZeroDenominatorException(f"Readout {k} has zero estimated probability")
    p_k = float(phi.shares[k - 1])
    point = min(a0 * q * p_k * incidence.overall / denominator, 1.0)

    J = pooled.J
    phi_cov = phi_covariance(pooled, adjusted, shares, incidence, k, [a.sigma2 for a in column], phi=phi).array
    keep = [i for i in range(2 * J) if i != k]
    base = phi.array[keep]

    def z_of(psi: np.ndarray) -> float:
        values = np.insert(psi[:-3], k, 0.0)
        beta, accuracies = values[0], values[1 : J + 1]
        free = values[J + 1 :]
        shares_all = np.append(free, 1.0 - free.sum())
        s_a0, s_a1, s_q = psi[-3:]
        own = s_a0 * s_q * shares_all[k - 1] * incidence.overall
        rest = beta * (1.0 - incidence.overall) + incidence.overall * float(accuracies @ shares_all)
        rest += s_a1 * (1.0 - s_q) * shares_all[k - 1] * incidence.overall
        return float(np.log(own) - np.log(rest))

    flags = {IntervalFlag.BLOCK_DIAGONAL_STAGE_COVARIANCE}
    if incidence.is_fixed:
        flags.add(IntervalFlag.FIXED_INCIDENCE)
    if adjusted.applied:
        flags.add(IntervalFlag.ADJUSTED_COUNTS)

    # boundary stage proportions are replaced by their half-adjusted values for the interval only
    half = 0.5 * (pooled.K + 1)
    center_a0, center_a1 = a0, a1
    if not (0.0 < tilde_in < 1.0):
        center_a0 = (tilde_in * n_in + 0.5) / (n_in + half) / positive
    if n_out and not (0.0 < tilde_out < 1.0):
        center_a1 = (tilde_out * n_out + 0.5) / (n_out + half) / positive
    if (center_a0, center_a1) != (a0, a1):
        flags |= {IntervalFlag.DEGENERATE_PROPORTION, IntervalFlag.ADJUSTED_COUNTS}

    psi = np.concatenate([base, [min(center_a0, 1.0), min(center_a1, 1.0), q]])
    a0_var = _stage_variance(center_a0 * positive, n_in, positive)
    a1_var = _stage_variance(center_a1 * positive, n_out, positive) if n_out else 0.0
    q_var = q * (1.0 - q) / row_total

    cov = np.zeros((psi.size, psi.size))
    cov[: base.size, : base.size] = phi_cov[np.ix_(keep, keep)]
    cov[-3, -3], cov[-2, -2], cov[-1, -1] = a0_var, a1_var, q_var

    try:
        z = z_of(psi)
        if not np.isfinite(z):
            raise DomainErrorException("stage logit is unbounded")
        gradient = numerical_gradient(z_of, psi)
        variance = max(float(gradient @ cov @ gradient), 0.0)
        center = float(special.expit(z))
        raw = wald_logit_interval(center, variance, alpha)
        interval = EstimateInterval(
            point=point,
            lower=min(raw.lower, point),
            upper=max(raw.upper, point),
            alpha=alpha,
            method=IntervalMethod.LOGIT_WALD,
            flags=frozenset(flags),
        )
    except (DomainErrorException, FloatingPointError, ZeroDivisionError):
        logger.warning(f"Stage '{s0}' of readout {k}: no informative interval")
        variance = 0.0
        interval = EstimateInterval(
            point=point,
            lower=0.0,
            upper=1.0,
            alpha=alpha,
            method=IntervalMethod.DEGENERATE,
            flags=frozenset(flags | {IntervalFlag.DEGENERATE_PROPORTION}),
        )

    logger.debug(f"PVP_{k}^({s0}) = {point:.6f} [{interval.lower:.6f}, {interval.upper:.6f}]")
    return PredictiveEstimate(
        readout_index=k,
        metric=PredictiveMetric.PVP,
        point=point,
        logit_variance=variance,
        interval=interval,
        incidence_mode=incidence.mode,
        adjusted_controls=adjusted.applied,
        stratum=s0,
    )


def _stage_variance(tilde: float, n: int, positive: float) -> float:
    """Binomial variance of a stage accuracy scaled by the pooled 1 / P(n_k+ > 0)."""
    if n == 0:
        return 0.0
    return tilde * (1.0 - tilde) / (n * positive**2)


def stage_cells(stratified: StratifiedRecords) -> List[Tuple[int, str, float]]:
    """(k, stage, P-hat(S = stage | D_k)) for every positive readout k and every stage holding cases of state k."""
    pooled = stratified.pooled
    cells = []
    for k in range(1, pooled.K + 1):
        if pooled.row_totals[k] == 0:
            continue
        cells.extend((k, label, share) for label, share in stratified.stage_shares(k).items() if share > 0.0)
    return cells

