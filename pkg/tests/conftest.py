from pathlib import Path

import pytest

from src.core.enums import AdjustPolicy
from src.repositories import IncidenceJsonRepository, MatrixCsvRepository, RecordsCsvRepository, ScenarioJsonRepository
from src.schemas.predictive import IncidenceSpec
from src.services.count_model import adjust_control_counts, case_shares, validate_matrix
from src.services.simulation import run_study

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "data"

# Validation-set accuracy per state: false negative, accuracy, CI low, CI up (percent)
VALIDATION_ACCURACY = {
    "Uterus": (75.0, 22.2, 11.4, 38.8),
    "UGI": (19.2, 65.4, 45.3, 81.2),
    "Prostate": (88.1, 11.9, 6.50, 20.8),
    "PG": (15.0, 75.0, 59.2, 86.1),
    "Lung": (35.1, 64.0, 54.6, 72.4),
    "HN": (32.0, 60.0, 39.9, 77.2),
    "CRC": (22.6, 71.7, 58.1, 82.2),
    "Breast": (60.6, 38.5, 29.6, 48.2),
    "Kidney": (88.0, 12.0, 3.80, 31.8),
    "Others": (33.3, 60.7, 52.6, 68.2),
}


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def liu_matrix():
    return MatrixCsvRepository().load(DATA_DIR / "liu2020.csv")


@pytest.fixture(scope="session")
def liu_incidence(liu_matrix) -> IncidenceSpec:
    return IncidenceJsonRepository().load(
        DATA_DIR / "incidence" / "liu2020_derived.json", state_labels=liu_matrix.state_labels
    )


@pytest.fixture(scope="session")
def liu_adjusted(liu_matrix):
    return adjust_control_counts(liu_matrix, AdjustPolicy.AUTO)


@pytest.fixture(scope="session")
def liu_shares(liu_matrix):
    return case_shares(liu_matrix)


@pytest.fixture(scope="session")
def staged_records():
    return RecordsCsvRepository().load(DATA_DIR / "staged_synthetic.csv")


@pytest.fixture
def binary_matrix():
    return validate_matrix([[9, 1], [2, 8]], ["Healthy", "Cancer"], ["Negative", "Cancer"])


@pytest.fixture
def screening_spec():
    return ScenarioJsonRepository().load(DATA_DIR / "scenarios" / "screening_500.json")


@pytest.fixture
def diagnostic_spec():
    return ScenarioJsonRepository().load(DATA_DIR / "scenarios" / "diagnostic_500.json")


@pytest.fixture
def sparse_spec():
    return ScenarioJsonRepository().load(DATA_DIR / "scenarios" / "sparse_995_500.json")


@pytest.fixture(scope="session")
def bundled_study():
    """Runs a bundled scenario at most once per session; studies are deterministic."""
    reports = {}

    def run(name: str):
        if name not in reports:
            spec = ScenarioJsonRepository().load(DATA_DIR / "scenarios" / f"{name}.json")
            reports[name] = run_study(spec, workers=4)
        return reports[name]

    return run
