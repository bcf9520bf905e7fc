from src.repositories.base import sha256_digest
from src.repositories.configs import IncidenceJsonRepository, ScenarioJsonRepository
from src.repositories.reports import (
    AnalysisReportRepository,
    CostBenefitCsvRepository,
    StratifiedReportRepository,
    StudyReportRepository,
)
from src.repositories.tables import MatrixCsvRepository, RecordsCsvRepository

__all__ = [
    "AnalysisReportRepository",
    "CostBenefitCsvRepository",
    "IncidenceJsonRepository",
    "MatrixCsvRepository",
    "RecordsCsvRepository",
    "ScenarioJsonRepository",
    "StratifiedReportRepository",
    "StudyReportRepository",
    "sha256_digest",
]
