import pytest

from src.core.enums import AdjustPolicy, IntervalFlag, PredictiveMetric
from src.core.exceptions import (
    DimensionMismatchException,
    EmptyStratumException,
    LabelMismatchException,
    NegativeCountException,
)
from src.schemas.predictive import IncidenceSpec
from src.schemas.strata import StratumRecord
from src.services.count_model import adjust_control_counts, case_shares
from src.services.intrinsic_accuracy import crude_sensitivity
from src.services.predictive_value import predictive_estimate
from src.services.stage_strata import (
    partition_by_stratum,
    stage_accuracy,
    stage_cells,
    stage_pvp_estimate,
)

INCIDENCE = IncidenceSpec(overall=0.02)


def _records(matrix, stratum):
    return [
        StratumRecord(state=state, stratum=stratum, readout=readout, count=matrix.counts[j][k])
        for j, state in enumerate(matrix.state_labels)
        for k, readout in enumerate(matrix.readout_labels)
    ]


class TestPartitionByStratum:
    """Long-format records into per-stratum and pooled tables."""

    def test_staged_fixture(self, staged_records):
        pooled = staged_records.pooled
        assert pooled.state_labels == ("Control", "Lung", "Colorectal", "Pancreas")
        assert pooled.readout_labels == ("Negative", "Lung", "Colorectal")
        assert pooled.N0 == 500
        assert set(staged_records.labels) == {"none", "I-II", "III-IV"}
        assert staged_records.stage_shares(1) == pytest.approx({"none": 0.0, "I-II": 0.5, "III-IV": 0.5})

    def test_two_copies_double_the_table(self, binary_matrix):
        stratified = partition_by_stratum(_records(binary_matrix, "a") + _records(binary_matrix, "b"))
        assert stratified.pooled.array.tolist() == (2 * binary_matrix.array).tolist()

    def test_single_stratum_is_the_table(self, liu_matrix):
        stratified = partition_by_stratum(_records(liu_matrix, "all"))
        assert stratified.pooled == liu_matrix
        assert stratified.stratum_matrix("all") == liu_matrix

    def test_per_stage_crude_sensitivity(self, staged_records):
        early = staged_records.stratum_matrix("I-II", pooled_controls=True)
        late = staged_records.stratum_matrix("III-IV", pooled_controls=True)
        lung = early.state_index("Lung")
        assert crude_sensitivity(early, lung, case_shares(early)).point == pytest.approx(45 / 75)
        assert crude_sensitivity(late, lung, case_shares(late)).point == pytest.approx(65 / 75)

    def test_errors(self):
        with pytest.raises(DimensionMismatchException):
            partition_by_stratum([])
        with pytest.raises(NegativeCountException):
            partition_by_stratum(
                [
                    StratumRecord(state="C", stratum="s", readout="Negative", count=5),
                    StratumRecord(state="A", stratum="s", readout="A", count=-1),
                ]
            )
        with pytest.raises(LabelMismatchException):
            partition_by_stratum(
                [
                    StratumRecord(state="C", stratum="s", readout="Negative", count=5),
                    StratumRecord(state="A", stratum="s", readout="Lung", count=3),
                ]
            )

    def test_stratum_without_cases(self, staged_records):
        with pytest.raises(EmptyStratumException):
            staged_records.stratum_matrix("none")


class TestStagePvp:
    """Stage decomposition of readout-specific PVP."""

    @pytest.fixture
    def adjusted(self, staged_records):
        return adjust_control_counts(staged_records.pooled, AdjustPolicy.OFF)

    def test_stages_add_up(self, staged_records, adjusted):
        pooled = staged_records.pooled
        for k in range(1, pooled.K + 1):
            total = predictive_estimate(
                pooled, adjusted, case_shares(pooled), INCIDENCE, k, PredictiveMetric.PVP
            ).point
            parts = [
                stage_pvp_estimate(staged_records, adjusted, INCIDENCE, k, stage).point for stage in ("I-II", "III-IV")
            ]
            assert sum(parts) == pytest.approx(total, abs=1e-12)

    def test_direct_joint_count_evaluation(self, staged_records, adjusted):
        pooled = staged_records.pooled
        k = 1
        estimate = stage_pvp_estimate(staged_records, adjusted, INCIDENCE, k, "I-II")
        shares = case_shares(pooled).array
        control = 12 / 500 * (1 - INCIDENCE.overall)
        cases = INCIDENCE.overall * sum(pooled.counts[j][k] / pooled.row_totals[j] * shares[j - 1] for j in range(1, 4))
        expected = INCIDENCE.overall * (40 / 75) * 0.5 * shares[0] / (control + cases)
        assert estimate.point == pytest.approx(expected, rel=1e-9)
        assert estimate.stratum == "I-II"
        assert IntervalFlag.BLOCK_DIAGONAL_STAGE_COVARIANCE in estimate.interval.flags
        assert estimate.interval.lower < estimate.point < estimate.interval.upper

    def test_single_stage_equals_pooled(self, liu_matrix, liu_adjusted, liu_incidence):
        stratified = partition_by_stratum(_records(liu_matrix, "all"))
        k = liu_matrix.readout_index("Lung")
        staged = stage_pvp_estimate(stratified, liu_adjusted, liu_incidence, k, "all")
        pooled = predictive_estimate(
            liu_matrix, liu_adjusted, case_shares(liu_matrix), liu_incidence, k, PredictiveMetric.PVP
        )
        assert staged.point == pytest.approx(pooled.point, abs=1e-12)

    def test_cells_skip_empty_stages(self, staged_records):
        cells = stage_cells(staged_records)
        assert sum(share for k, _, share in cells if k == 1) == pytest.approx(1.0)
        assert {(k, label) for k, label, _ in cells} == {
            (1, "I-II"),
            (1, "III-IV"),
            (2, "I-II"),
            (2, "III-IV"),
        }

    def test_unknown_stage(self, staged_records, adjusted):
        with pytest.raises(LabelMismatchException):
            stage_pvp_estimate(staged_records, adjusted, INCIDENCE, 1, "IV")


class TestStageAccuracy:
    """Intrinsic accuracy within one disease stage."""

    def test_late_stage_lung(self, staged_records):
        estimate = stage_accuracy(staged_records, 1, 1, "III-IV")
        assert estimate.point == pytest.approx(60 / 75, abs=1e-9)
        assert estimate.interval.lower < estimate.point < estimate.interval.upper
