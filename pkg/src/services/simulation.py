"""
Monte Carlo harness for bias, interval coverage and interval width.

Every replicate draws from its own Philox stream keyed by (seed, replicate
index), so a study gives the same numbers whatever the worker count or the
order in which chunks finish. Aggregation always runs in index order.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import settings
from src.core.enums import AdjustPolicy, IncidenceMode, PredictiveMetric
from src.core.exceptions import ValidationException
from src.schemas.count_model import CountMatrix
from src.schemas.predictive import IncidenceSpec, PhiVector
from src.schemas.simulation import ScenarioSpec, StudyReport, StudyRow, StudyStats
from src.services.count_model import (
    adjust_control_counts,
    case_shares,
    collapse_cases,
    recommend_adjustment,
    validate_matrix,
)
from src.services.intrinsic_accuracy import accuracy_estimate, control_rates
from src.services.marginal_readout import marginal_estimate
from src.services.predictive_value import predictive_estimate, pvn_point, pvp_point, readout_terms
from src.services.stat_kernels import resolve_alpha
from src.utils.logger import get_logger

logger = get_logger(__name__)

# (estimate, lower, upper), or None when the metric could not be computed
Triple = Optional[Tuple[float, float, float]]


def adjustment_applies(spec: ScenarioSpec) -> bool:
    """The scenario policy; `auto` applies the expected false-positive count rule."""
    if spec.adjust_policy == AdjustPolicy.AUTO:
        return recommend_adjustment(spec.control_row, spec.n0)
    return spec.adjust_policy == AdjustPolicy.ON


def scenario_incidence(spec: ScenarioSpec) -> IncidenceSpec:
    if spec.incidence_mode == IncidenceMode.REGISTRY:
        return IncidenceSpec(
            overall=spec.overall_incidence,
            mode=spec.incidence_mode,
            registry_shares=tuple(float(p) for p in spec.shares),
        )
    return IncidenceSpec(overall=spec.overall_incidence, mode=spec.incidence_mode)


def _truth_phi(spec: ScenarioSpec, k: int) -> PhiVector:
    conditional = spec.conditional
    values = [conditional[0, k]] + list(conditional[1:, k]) + list(spec.case_shares)
    return PhiVector(readout_index=k, values=tuple(float(v) for v in values))


def scenario_truth(spec: ScenarioSpec) -> Dict[str, float]:
    """Closed-form values of every reported metric at the scenario's parameters."""
    incidence = IncidenceSpec(overall=spec.overall_incidence)
    conditional = spec.conditional
    truth = {"SP_0": float(conditional[0, 0])}
    for k in range(1, spec.K + 1):
        truth[f"A_{k}"] = float(conditional[k, k])
    truth["PVN_0"] = pvn_point(_truth_phi(spec, 0), incidence, 0)
    for k in range(1, spec.K + 1):
        truth[f"PVP_{k}"] = pvp_point(_truth_phi(spec, k), incidence, k)
    for k in range(spec.K + 1):
        truth[f"P(T_{k})"] = readout_terms(_truth_phi(spec, k), spec.overall_incidence)[2]
    return truth


def replicate_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for one replicate: Philox keyed by the seed, counter offset by the index."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def sample_replicate(spec: ScenarioSpec, rng: np.random.Generator) -> CountMatrix:
    """Case-state counts ~ Multinomial(N1, p); each row ~ Multinomial(row total, its readout law)."""
    conditional = spec.conditional
    state_totals = rng.multinomial(spec.n1, spec.shares)
    rows = [rng.multinomial(spec.n0, conditional[0])]
    for j, total in enumerate(state_totals, start=1):
        rows.append(rng.multinomial(int(total), conditional[j]))
    states, readouts = spec.labels
    return validate_matrix([[int(c) for c in row] for row in rows], states, readouts)


def _guarded(compute) -> Triple:
    try:
        interval = compute()
    except ValidationException as exc:
        logger.debug(f"Replicate metric failed: {exc.detail}")
        return None
    return interval.point, interval.lower, interval.upper


def evaluate_replicate(
    matrix: CountMatrix, spec: ScenarioSpec, alpha: Optional[float] = None, adjust: Optional[bool] = None
) -> Dict[str, Triple]:
    """
    Run the estimator suite on one simulated table.

    ``adjust`` forces the control-count adjustment on or off; by default the
    scenario's policy decides, with ``auto`` using the expected false-positive
    counts the scenario knows.
    """
    alpha = resolve_alpha(alpha, spec.alpha)
    if adjust is None:
        adjust = adjustment_applies(spec)
    adjusted = adjust_control_counts(matrix, AdjustPolicy.ON if adjust else AdjustPolicy.OFF)
    incidence = scenario_incidence(spec)
    shares = case_shares(matrix)
    collapsed = collapse_cases(matrix)

    results: Dict[str, Triple] = {}
    results["SP_0"] = _guarded(lambda: control_rates(matrix, adjusted, alpha).specificity)
    for k in range(1, spec.K + 1):
        results[f"A_{k}"] = _guarded(lambda k=k: accuracy_estimate(matrix, k, k, shares, alpha).interval)
    results["PVN_0"] = _guarded(
        lambda: predictive_estimate(matrix, adjusted, shares, incidence, 0, PredictiveMetric.PVN, alpha).interval
    )
    for k in range(1, spec.K + 1):
        results[f"PVP_{k}"] = _guarded(
            lambda k=k: predictive_estimate(
                matrix, adjusted, shares, incidence, k, PredictiveMetric.PVP, alpha
            ).interval
        )
    for k in range(spec.K + 1):
        results[f"P(T_{k})"] = _guarded(
            lambda k=k: marginal_estimate(collapsed, adjusted, spec.overall_incidence, k, alpha)
        )
    return results


def _run_chunk(spec: ScenarioSpec, indices: Sequence[int], alpha: float) -> List[Tuple[bool, Dict, Optional[Dict]]]:
    applied = adjustment_applies(spec)
    out = []
    for index in indices:
        matrix = sample_replicate(spec, replicate_stream(spec.seed, index))
        primary = evaluate_replicate(matrix, spec, alpha, adjust=applied)
        unadjusted = evaluate_replicate(matrix, spec, alpha, adjust=False) if spec.compare_unadjusted else None
        out.append((applied, primary, unadjusted))
    return out


class _Accumulator:
    """Running sums for one metric, fed in replicate order."""

    def __init__(self, truth: float):
        self.truth = truth
        self.bias = 0.0
        self.width = 0.0
        self.covered = 0
        self.evaluated = 0
        self.failures = 0

    def add(self, triple: Triple) -> None:
        if triple is None:
            self.failures += 1
            return
        estimate, lower, upper = triple
        self.evaluated += 1
        self.bias += estimate - self.truth
        self.width += upper - lower
        self.covered += int(lower <= self.truth <= upper)

    def stats(self, replicates: int) -> StudyStats:
        n = max(self.evaluated, 1)
        return StudyStats(
            bias=100.0 * self.bias / n,
            coverage=100.0 * self.covered / replicates,
            width=100.0 * self.width / n,
            failures=self.failures,
        )


def _chunks(replicates: int, size: int) -> List[range]:
    return [range(start, min(start + size, replicates)) for start in range(0, replicates, size)]


def run_study(spec: ScenarioSpec, alpha: Optional[float] = None, workers: Optional[int] = None) -> StudyReport:
    """
    Simulate ``spec.replicates`` studies and summarise every metric.

    Coverage counts failed replicates as misses; bias and width average over
    the replicates where the metric was computed.
    """
    alpha = resolve_alpha(alpha, spec.alpha)
    workers = workers or settings.SIM_WORKERS
    truth = scenario_truth(spec)
    primary = {metric: _Accumulator(truth[metric]) for metric in spec.metric_ids}
    secondary = {metric: _Accumulator(truth[metric]) for metric in spec.metric_ids}
    chunks = _chunks(spec.replicates, settings.SIM_CHUNK_SIZE)
    adjusted_replicates = 0

    logger.info(f"Study '{spec.name}': {spec.replicates} replicates, seed {spec.seed}, {workers} worker(s)")

    def consume(results) -> None:
        nonlocal adjusted_replicates
        for applied, first, second in results:
            adjusted_replicates += int(applied)
            for metric in spec.metric_ids:
                primary[metric].add(first[metric])
                if second is not None:
                    secondary[metric].add(second[metric])

    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, spec, chunk, alpha) for chunk in chunks]
            for done, future in enumerate(futures, start=1):
                consume(future.result())
                logger.info(f"Chunk {done}/{len(chunks)} done")
    else:
        for done, chunk in enumerate(chunks, start=1):
            consume(_run_chunk(spec, chunk, alpha))
            logger.info(f"Chunk {done}/{len(chunks)} done")

    rows = tuple(
        StudyRow(
            metric=metric,
            truth=100.0 * truth[metric],
            stats=primary[metric].stats(spec.replicates),
            unadjusted=secondary[metric].stats(spec.replicates) if spec.compare_unadjusted else None,
        )
        for metric in spec.metric_ids
    )
    for row in rows:
        if row.stats.failures:
            logger.warning(f"{row.metric}: {row.stats.failures} replicate(s) could not be evaluated")

    return StudyReport(
        scenario=spec,
        replicates=spec.replicates,
        seed=spec.seed,
        alpha=alpha,
        adjusted_replicates=adjusted_replicates,
        rows=rows,
    )
