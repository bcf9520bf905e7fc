import json

import pytest

from src.core.enums import IncidenceMode
from src.core.exceptions import (
    DomainErrorException,
    InvalidScenarioException,
    LabelMismatchException,
    NegativeCountException,
    ParseErrorException,
    ReportIOException,
)
from src.repositories import (
    AnalysisReportRepository,
    CostBenefitCsvRepository,
    IncidenceJsonRepository,
    MatrixCsvRepository,
    RecordsCsvRepository,
    ScenarioJsonRepository,
    StudyReportRepository,
    sha256_digest,
)
from src.repositories.base import round_significant, sibling
from src.schemas.predictive import IncidenceSpec
from src.schemas.report import CostBenefitPoint


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestHelpers:
    def test_round_significant(self):
        payload = {"a": 0.123456789, "b": [12345.6789, True, 3], "c": {"d": 1e-9 / 3}}
        assert round_significant(payload, 6) == {"a": 0.123457, "b": [12345.7, True, 3], "c": {"d": 3.33333e-10}}

    def test_sibling(self, tmp_path):
        assert sibling(tmp_path / "out" / "report.json", "intrinsic") == tmp_path / "out" / "report.intrinsic.csv"

    def test_digest_of_missing_file(self, tmp_path):
        with pytest.raises(ReportIOException):
            sha256_digest(tmp_path / "absent.csv")


class TestMatrixCsvRepository:
    """Wide count tables."""

    def test_liu_table(self, liu_matrix):
        assert liu_matrix.J == 10 and liu_matrix.K == 10
        assert liu_matrix.state_labels[0] == "Control"
        assert liu_matrix.readout_labels[0] == "Negative"

    def test_save_and_load(self, liu_matrix, tmp_path):
        path = MatrixCsvRepository().save(liu_matrix, tmp_path / "copy.csv")
        assert MatrixCsvRepository().load(path) == liu_matrix

    def test_comments_and_blank_lines(self, tmp_path):
        path = _write(tmp_path / "m.csv", "# note\nstate,Negative,A\n\nControl,9,1\nA,2,8\n")
        assert MatrixCsvRepository().load(path).counts == ((9, 1), (2, 8))

    @pytest.mark.parametrize(
        "text",
        [
            "state,Negative,A\nControl,9,1\nA,2\n",
            "state,Negative,A\nControl,9,x\nA,2,8\n",
            "label,Negative,A\nControl,9,1\nA,2,8\n",
            "state,Negative,A\nControl,9,1\n",
        ],
        ids=["ragged", "not-a-number", "bad-header", "no-case-row"],
    )
    def test_malformed(self, tmp_path, text):
        with pytest.raises(ParseErrorException):
            MatrixCsvRepository().load(_write(tmp_path / "m.csv", text))

    def test_negative_count(self, tmp_path):
        with pytest.raises(NegativeCountException):
            MatrixCsvRepository().load(_write(tmp_path / "m.csv", "state,Negative,A\nControl,9,1\nA,-2,8\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ReportIOException) as exc_info:
            MatrixCsvRepository().load(tmp_path / "absent.csv")
        assert exc_info.value.exit_code == 1


class TestRecordsCsvRepository:
    """Long-format stratified records."""

    def test_column_order_is_free(self, tmp_path):
        path = _write(
            tmp_path / "r.csv",
            "count,readout,stratum,state\n9,Negative,all,Control\n1,A,all,Control\n2,Negative,all,A\n8,A,all,A\n",
        )
        stratified = RecordsCsvRepository().load(path)
        assert stratified.pooled.counts == ((9, 1), (2, 8))
        assert stratified.labels == ("all",)

    def test_negative_count(self, tmp_path):
        path = _write(tmp_path / "r.csv", "state,stratum,readout,count\nControl,s,Negative,-1\n")
        with pytest.raises(ParseErrorException):
            RecordsCsvRepository().load(path)

    def test_missing_column(self, tmp_path):
        with pytest.raises(ParseErrorException):
            RecordsCsvRepository().load(_write(tmp_path / "r.csv", "state,readout,count\nControl,Negative,1\n"))

    def test_save_and_load(self, staged_records, tmp_path):
        path = RecordsCsvRepository().save(staged_records, tmp_path / "copy.csv")
        assert RecordsCsvRepository().load(path).pooled == staged_records.pooled


class TestIncidenceJsonRepository:
    """Incidence files with optional registry shares and strata."""

    def test_shares_map_follows_state_order(self, tmp_path):
        path = _write(
            tmp_path / "i.json",
            json.dumps({"overall": 0.02, "mode": "registry", "shares": {"B": 0.25, "A": 0.75}}),
        )
        spec = IncidenceJsonRepository().load(path, state_labels=["Control", "A", "B"])
        assert spec.mode == IncidenceMode.REGISTRY
        assert spec.registry_shares == (0.75, 0.25)

    def test_shares_map_with_unknown_state(self, tmp_path):
        path = _write(tmp_path / "i.json", json.dumps({"overall": 0.02, "shares": {"A": 0.5, "C": 0.5}}))
        with pytest.raises(LabelMismatchException):
            IncidenceJsonRepository().load(path, state_labels=["Control", "A", "B"])

    def test_strata(self, tmp_path):
        path = _write(tmp_path / "i.json", json.dumps({"overall": 0.02, "strata": {"male": {"overall": 0.03}}}))
        spec = IncidenceJsonRepository().load(path)
        assert spec.for_stratum("male").overall == pytest.approx(0.03)
        assert spec.for_stratum("female").overall == pytest.approx(0.02)

    def test_out_of_range(self, tmp_path):
        with pytest.raises(DomainErrorException):
            IncidenceJsonRepository().load(_write(tmp_path / "i.json", '{"overall": 1.5}'))

    @pytest.mark.parametrize("text", ['{"overall": 0.1, "extra": 1}', "{}", "[0.1]", "{not json"])
    def test_malformed(self, tmp_path, text):
        with pytest.raises(ParseErrorException):
            IncidenceJsonRepository().load(_write(tmp_path / "i.json", text))

    def test_save_and_load(self, tmp_path):
        spec = IncidenceSpec(overall=0.0133, mode=IncidenceMode.REGISTRY, registry_shares=(0.6, 0.4))
        path = IncidenceJsonRepository().save(spec, tmp_path / "i.json")
        assert IncidenceJsonRepository().load(path) == spec


class TestScenarioJsonRepository:
    def test_name_defaults_to_file_stem(self, screening_spec, tmp_path):
        payload = screening_spec.model_dump(mode="json")
        payload.pop("name")
        spec = ScenarioJsonRepository().load(_write(tmp_path / "my_study.json", json.dumps(payload)))
        assert spec.name == "my_study"

    def test_invalid_scenario(self, screening_spec, tmp_path):
        payload = screening_spec.model_dump(mode="json")
        payload["n0"] = "many"
        with pytest.raises(InvalidScenarioException) as exc_info:
            ScenarioJsonRepository().load(_write(tmp_path / "bad.json", json.dumps(payload)))
        assert exc_info.value.exit_code == 2


class TestReportRepositories:
    """Report files and their CSV companions."""

    def test_analysis_report_files(self, liu_matrix, liu_incidence, tmp_path):
        from src.services.analysis import analyze_matrix

        report = analyze_matrix(liu_matrix, liu_incidence)
        repository = AnalysisReportRepository()
        first = repository.save(report, tmp_path / "a" / "report.json")
        intrinsic = (tmp_path / "a" / "report.intrinsic.csv").read_text(encoding="utf-8").splitlines()
        assert intrinsic[0] == "state,cases,false_negative,accuracy,ci_low,ci_up,flags"
        assert intrinsic[1].startswith("Uterus,")
        assert (tmp_path / "a" / "report.predictive.csv").exists()

        second = repository.save(repository.load(first), tmp_path / "b" / "report.json")
        assert first.read_bytes() == second.read_bytes()

    def test_study_table(self, screening_spec, tmp_path):
        from src.services.simulation import run_study

        report = run_study(screening_spec.model_copy(update={"replicates": 3}))
        StudyReportRepository().save(report, tmp_path / "s.json")
        rows = (tmp_path / "s.table.csv").read_text(encoding="utf-8").splitlines()
        assert rows[0] == "Metric,Value,Bias,Coverage,Width,Failures"
        assert rows[1].startswith("SP_0,98.000,")
        assert len(rows) == 1 + len(screening_spec.metric_ids)

    def test_cost_benefit_csv(self, tmp_path):
        points = [CostBenefitPoint(readout="Lung", benefit=0.64, cost=0.401)]
        path = CostBenefitCsvRepository().save(points, tmp_path / "cb.csv")
        assert path.read_text(encoding="utf-8").splitlines()[1] == "Lung,0.6400,0.4010,true"
        assert CostBenefitCsvRepository().load(path) == points
