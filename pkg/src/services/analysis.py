"""
Full analysis of a count table, stratified analyses and cost-benefit points.

Every metric is computed on its own; a metric that raises is recorded in
the report's ``errors`` map and the analysis carries on.
"""

from typing import Callable, Dict, List, Optional, TypeVar

from src.core.config import settings
from src.core.enums import AdjustPolicy, PredictiveMetric
from src.core.exceptions import ValidationException
from src.schemas.count_model import CountMatrix
from src.schemas.predictive import IncidenceSpec
from src.schemas.report import (
    AnalysisReport,
    ControlBlock,
    CostBenefitPoint,
    LabeledInterval,
    PredictiveBlock,
    Provenance,
    StageAccuracyRow,
    StageValueRow,
    StateAccuracyBlock,
    StratifiedReport,
)
from src.schemas.strata import StratifiedRecords
from src.services.count_model import adjust_control_counts, case_shares, collapse_cases
from src.services.intrinsic_accuracy import (
    accuracy_estimate,
    aggregate_accuracy,
    control_rates,
    crude_sensitivity,
    false_negative_estimate,
)
from src.services.marginal_readout import marginal_estimate
from src.services.predictive_value import effective_shares, overall_pvp_point, predictive_estimate
from src.services.stage_strata import stage_accuracy, stage_cells, stage_pvp_estimate
from src.services.stat_kernels import resolve_alpha
from src.utils.logger import get_logger

logger = get_logger(__name__)

T = TypeVar("T")


class _ErrorLog(dict):
    """Collects per-metric failures while the analysis continues."""

    def attempt(self, metric: str, compute: Callable[[], T]) -> Optional[T]:
        try:
            return compute()
        except ValidationException as exc:
            logger.warning(f"{metric}: {exc.detail}")
            self[metric] = exc.detail
            return None


def analyze_matrix(
    matrix: CountMatrix,
    incidence: IncidenceSpec,
    alpha: Optional[float] = None,
    adjust_policy: Optional[AdjustPolicy] = None,
    digests: Optional[Dict[str, str]] = None,
    stratum: Optional[str] = None,
) -> AnalysisReport:
    alpha = resolve_alpha(alpha)
    adjust_policy = AdjustPolicy(adjust_policy or settings.ADJUST_POLICY)
    adjusted = adjust_control_counts(matrix, adjust_policy)
    shares = case_shares(matrix)
    accuracy_shares = effective_shares(shares, incidence, matrix.J)
    collapsed = collapse_cases(matrix)
    errors = _ErrorLog()

    logger.info(
        f"Analyzing {matrix.J} states x {matrix.K} readouts (N0={matrix.N0}, N1={matrix.N1}), "
        f"adjustment {'applied' if adjusted.applied else 'not applied'}"
    )

    states = []
    for j in range(1, matrix.J + 1):
        label = matrix.state_labels[j]
        accuracy = None
        if j <= matrix.K:
            accuracy = errors.attempt(
                f"A[{label}]", lambda j=j: accuracy_estimate(matrix, j, j, accuracy_shares, alpha).interval
            )
        states.append(
            StateAccuracyBlock(
                state=label,
                cases=int(matrix.row_totals[j]),
                false_negative=errors.attempt(
                    f"FN[{label}]", lambda j=j: false_negative_estimate(matrix, j, accuracy_shares, alpha).interval
                ),
                crude_sensitivity=errors.attempt(
                    f"SE[{label}]", lambda j=j: crude_sensitivity(matrix, j, accuracy_shares, alpha)
                ),
                accuracy=accuracy,
            )
        )

    rates = control_rates(matrix, adjusted, alpha)
    control = ControlBlock(
        controls=matrix.N0,
        specificity=rates.specificity,
        false_positive=tuple(
            LabeledInterval(label=label, interval=interval)
            for label, interval in zip(matrix.readout_labels[1:], rates.false_positive)
        ),
    )

    predictive = []
    for k, label in enumerate(matrix.readout_labels):
        pvp = None
        if k >= 1:
            pvp = errors.attempt(
                f"PVP[{label}]",
                lambda k=k: predictive_estimate(matrix, adjusted, shares, incidence, k, PredictiveMetric.PVP, alpha),
            )
        predictive.append(
            PredictiveBlock(
                readout=label,
                marginal=errors.attempt(
                    f"P(T)[{label}]", lambda k=k: marginal_estimate(collapsed, adjusted, incidence.overall, k, alpha)
                ),
                pvp=pvp,
                pvn=errors.attempt(
                    f"PVN[{label}]",
                    lambda k=k: predictive_estimate(
                        matrix, adjusted, shares, incidence, k, PredictiveMetric.PVN, alpha
                    ),
                ),
            )
        )

    return AnalysisReport(
        stratum=stratum,
        state_labels=matrix.state_labels,
        readout_labels=matrix.readout_labels,
        states=tuple(states),
        control=control,
        predictive=tuple(predictive),
        aggregate_accuracy=errors.attempt("aggregate_accuracy", lambda: aggregate_accuracy(matrix)),
        overall_pvp=errors.attempt(
            "overall_pvp", lambda: overall_pvp_point(matrix, adjusted, shares, incidence)
        ),
        provenance=Provenance(
            version=settings.VERSION,
            alpha=alpha,
            adjust_policy=adjust_policy,
            adjustment_applied=adjusted.applied,
            incidence_mode=incidence.mode,
            overall_incidence=incidence.overall,
            input_digests=digests or {},
        ),
        errors=dict(errors),
    )


def analyze_strata(
    stratified: StratifiedRecords,
    incidence: IncidenceSpec,
    alpha: Optional[float] = None,
    adjust_policy: Optional[AdjustPolicy] = None,
    digests: Optional[Dict[str, str]] = None,
    stage: bool = False,
) -> StratifiedReport:
    """
    Pooled analysis plus either one analysis per stratum (demographic strata,
    each with its own incidence when one is given) or, with ``stage``, the
    stage decomposition of every PVP_k and per-stage intrinsic accuracy.
    """
    alpha = resolve_alpha(alpha)
    adjust_policy = AdjustPolicy(adjust_policy or settings.ADJUST_POLICY)
    pooled = stratified.pooled
    report = analyze_matrix(pooled, incidence, alpha, adjust_policy, digests)
    errors = _ErrorLog()

    if not stage:
        strata = {}
        for label in stratified.labels:
            analysis = errors.attempt(
                f"stratum[{label}]",
                lambda label=label: analyze_matrix(
                    stratified.stratum_matrix(label), incidence.for_stratum(label), alpha, adjust_policy, digests, label
                ),
            )
            if analysis is not None:
                strata[label] = analysis
        return StratifiedReport(pooled=report, strata=strata, errors=dict(errors))

    adjusted = adjust_control_counts(pooled, adjust_policy)
    values, accuracies = [], []
    for k, label, share in stage_cells(stratified):
        readout = pooled.readout_labels[k]
        pvp = errors.attempt(
            f"PVP[{readout}|{label}]",
            lambda k=k, label=label: stage_pvp_estimate(stratified, adjusted, incidence, k, label, alpha),
        )
        if pvp is not None:
            values.append(StageValueRow(readout=readout, stage=label, stage_share=share, pvp=pvp))
        accuracy = errors.attempt(
            f"A[{readout}|{label}]", lambda k=k, label=label: stage_accuracy(stratified, k, k, label, alpha)
        )
        if accuracy is not None:
            accuracies.append(StageAccuracyRow(state=readout, stage=label, accuracy=accuracy.interval))

    logger.info(f"Stage decomposition: {len(values)} stage values over {pooled.K} readouts")
    return StratifiedReport(
        pooled=report, stage_values=tuple(values), stage_accuracy=tuple(accuracies), errors=dict(errors)
    )


def cost_benefit_points(report: AnalysisReport) -> List[CostBenefitPoint]:
    """(IA(k), 1 - PVP(k)) for every positive readout that has both values."""
    points = []
    for label in report.readout_labels[1:]:
        state = report.state_block(label)
        block = report.predictive_block(label)
        if state is None or state.accuracy is None or block is None or block.pvp is None:
            logger.warning(f"Readout '{label}' lacks accuracy or PVP, left out of the cost-benefit data")
            continue
        points.append(
            CostBenefitPoint(readout=label, benefit=state.accuracy.point, cost=1.0 - block.pvp.point)
        )
    return points
