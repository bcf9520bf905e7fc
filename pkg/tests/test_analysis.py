import pytest

from src.core.enums import AdjustPolicy
from src.core.exceptions import DomainErrorException
from src.schemas.predictive import IncidenceSpec
from src.schemas.strata import StratumRecord
from src.services.analysis import analyze_matrix, analyze_strata, cost_benefit_points
from src.services.count_model import validate_matrix
from src.services.stage_strata import partition_by_stratum


@pytest.fixture(scope="module")
def liu_report(liu_matrix, liu_incidence):
    return analyze_matrix(liu_matrix, liu_incidence, adjust_policy=AdjustPolicy.ON, digests={"liu2020.csv": "abc"})


class TestAnalyzeMatrix:
    """The full report for one count table."""

    def test_blocks_follow_the_labels(self, liu_report, liu_matrix):
        assert [b.state for b in liu_report.states] == list(liu_matrix.state_labels[1:])
        assert [b.readout for b in liu_report.predictive] == list(liu_matrix.readout_labels)
        assert liu_report.predictive_block("Negative").pvp is None
        assert len(liu_report.control.false_positive) == liu_matrix.K

    def test_provenance(self, liu_report):
        provenance = liu_report.provenance
        assert provenance.adjust_policy == AdjustPolicy.ON
        assert provenance.adjustment_applied is True
        assert provenance.overall_incidence == pytest.approx(0.0133)
        assert provenance.input_digests == {"liu2020.csv": "abc"}

    def test_headline_values(self, liu_report):
        lung = liu_report.predictive_block("Lung").pvp.point
        kidney = liu_report.predictive_block("Kidney").pvp.point
        assert lung == pytest.approx(0.599, abs=0.01)
        assert kidney == pytest.approx(0.0707, abs=0.005)
        assert 0.978 <= liu_report.predictive_block("Negative").marginal.point <= 0.979
        assert 0.993 <= liu_report.predictive_block("Negative").pvn.point <= 0.995
        assert liu_report.aggregate_accuracy == pytest.approx(323 / 654)
        assert kidney < liu_report.overall_pvp < lung

    def test_marginal_distribution_sums_to_one(self, liu_report):
        assert sum(b.marginal.point for b in liu_report.predictive) == pytest.approx(1.0)

    def test_failed_metric_is_recorded(self):
        matrix = validate_matrix([[9, 1], [0, 0], [3, 1]], ["Control", "A", "B"], ["Negative", "A"])
        report = analyze_matrix(matrix, IncidenceSpec(overall=0.01), adjust_policy=AdjustPolicy.OFF)
        assert report.aggregate_accuracy is None
        assert "aggregate_accuracy" in report.errors
        assert report.state_block("B").accuracy is None
        assert report.predictive_block("Negative").marginal is not None

    def test_zero_alpha_is_rejected(self, liu_matrix, liu_incidence):
        with pytest.raises(DomainErrorException):
            analyze_matrix(liu_matrix, liu_incidence, alpha=0.0)


class TestCostBenefit:
    """Benefit = intrinsic accuracy, cost = 1 - PVP."""

    def test_liu_points(self, liu_report):
        points = {p.readout: p for p in cost_benefit_points(liu_report)}
        assert set(points) == set(liu_report.readout_labels[1:])
        assert points["Lung"].benefit == pytest.approx(0.640, abs=0.001)
        assert points["Lung"].in_target_region
        assert points["Kidney"].benefit == pytest.approx(0.12, abs=0.001)
        assert points["Kidney"].cost == pytest.approx(0.93, abs=0.005)
        assert not points["Kidney"].in_target_region


class TestAnalyzeStrata:
    """Demographic and stage stratification."""

    def test_demographic_strata(self, binary_matrix):
        records = [
            StratumRecord(state=state, stratum=stratum, readout=readout, count=binary_matrix.counts[j][k])
            for stratum in ("female", "male")
            for j, state in enumerate(binary_matrix.state_labels)
            for k, readout in enumerate(binary_matrix.readout_labels)
        ]
        incidence = IncidenceSpec(
            overall=0.02, strata={"female": IncidenceSpec(overall=0.01), "male": IncidenceSpec(overall=0.03)}
        )
        report = analyze_strata(partition_by_stratum(records), incidence, adjust_policy=AdjustPolicy.OFF)
        assert set(report.strata) == {"female", "male"}
        assert report.strata["male"].provenance.overall_incidence == pytest.approx(0.03)
        assert report.pooled.stratum is None
        assert report.strata["female"].stratum == "female"
        female = report.strata["female"].predictive_block("Cancer").pvp.point
        male = report.strata["male"].predictive_block("Cancer").pvp.point
        assert female < male
        assert report.stage_values == ()

    def test_stage_mode(self, staged_records):
        report = analyze_strata(
            staged_records, IncidenceSpec(overall=0.02), adjust_policy=AdjustPolicy.OFF, stage=True
        )
        assert report.strata == {}
        assert {(row.readout, row.stage) for row in report.stage_values} == {
            ("Lung", "I-II"),
            ("Lung", "III-IV"),
            ("Colorectal", "I-II"),
            ("Colorectal", "III-IV"),
        }
        for readout in ("Lung", "Colorectal"):
            parts = sum(row.pvp.point for row in report.stage_values if row.readout == readout)
            assert parts == pytest.approx(report.pooled.predictive_block(readout).pvp.point, abs=1e-12)
        late_lung = next(r for r in report.stage_accuracy if r.state == "Lung" and r.stage == "III-IV")
        assert late_lung.accuracy.point == pytest.approx(0.8, abs=1e-9)
