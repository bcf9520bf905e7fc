from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from pydantic import ValidationError

from src.core.exceptions import (
    DomainErrorException,
    InvalidScenarioException,
    LabelMismatchException,
    ParseErrorException,
)
from src.interfaces.repository import PathLike
from src.repositories.base import FileRepository
from src.schemas.predictive import IncidenceSpec
from src.schemas.simulation import ScenarioSpec
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _validation_message(exc: ValidationError) -> str:
    return "; ".join(f"{'.'.join(str(p) for p in err['loc']) or 'root'}: {err['msg']}" for err in exc.errors())


class IncidenceJsonRepository(FileRepository):
    """
    Incidence file::

        {"overall": 0.0133, "mode": "sample"}
        {"overall": 0.0133, "mode": "registry", "shares": {"Lung": 0.2, ...}}

    ``shares`` is either a list in case-state order or a map from state label
    to share, in which case ``state_labels`` (control first) orders it. An
    optional ``strata`` map holds one such object per stratum label.
    """

    def load(self, path: PathLike, state_labels: Optional[Sequence[str]] = None, **kwargs: Any) -> IncidenceSpec:
        payload = self._read_json(path)
        if not isinstance(payload, dict):
            raise ParseErrorException(f"'{path}' must hold a JSON object")
        spec = self._build(payload, state_labels)
        logger.info(f"Loaded incidence P(D)={spec.overall} ({spec.mode}) from {path}")
        return spec

    def _build(self, payload: Dict[str, Any], state_labels: Optional[Sequence[str]]) -> IncidenceSpec:
        unknown = set(payload) - {"overall", "mode", "shares", "strata"}
        if unknown:
            raise ParseErrorException(f"Unknown incidence field(s): {', '.join(sorted(unknown))}")
        if "overall" not in payload:
            raise ParseErrorException("Incidence file needs an 'overall' value")

        fields: Dict[str, Any] = {"overall": payload["overall"], "mode": payload.get("mode", "sample")}
        if payload.get("shares") is not None:
            fields["registry_shares"] = self._ordered_shares(payload["shares"], state_labels)
        if payload.get("strata"):
            fields["strata"] = {
                str(label): self._build(item, state_labels) for label, item in dict(payload["strata"]).items()
            }
        try:
            return IncidenceSpec(**fields)
        except ValidationError as exc:
            raise DomainErrorException(f"Invalid incidence: {_validation_message(exc)}") from exc

    @staticmethod
    def _ordered_shares(shares: Any, state_labels: Optional[Sequence[str]]) -> tuple:
        if isinstance(shares, list):
            return tuple(shares)
        if not isinstance(shares, dict):
            raise ParseErrorException("'shares' must be a list or a map of state label to share")
        if state_labels is None:
            raise LabelMismatchException("A shares map needs the table's state labels to be ordered")
        cases = [label.strip() for label in state_labels[1:]]
        mapped = {str(key).strip(): value for key, value in shares.items()}
        missing = [label for label in cases if label not in mapped]
        extra = [label for label in mapped if label not in cases]
        if missing or extra:
            raise LabelMismatchException(
                f"Registry shares do not match the case states (missing: {missing or '-'}, unknown: {extra or '-'})"
            )
        return tuple(mapped[label] for label in cases)

    def save(self, obj: IncidenceSpec, path: PathLike, **kwargs: Any) -> Path:
        return self._write_json(path, self._dump(obj))

    def _dump(self, spec: IncidenceSpec) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"overall": spec.overall, "mode": str(spec.mode)}
        if spec.registry_shares is not None:
            payload["shares"] = list(spec.registry_shares)
        if spec.strata:
            payload["strata"] = {label: self._dump(item) for label, item in spec.strata.items()}
        return payload


class ScenarioJsonRepository(FileRepository):
    """Simulation scenario: a JSON object carrying the ScenarioSpec fields."""

    def load(self, path: PathLike, **kwargs: Any) -> ScenarioSpec:
        payload = self._read_json(path)
        if not isinstance(payload, dict):
            raise ParseErrorException(f"'{path}' must hold a JSON object")
        try:
            spec = ScenarioSpec(**payload)
        except ValidationError as exc:
            raise InvalidScenarioException(f"Invalid scenario '{path}': {_validation_message(exc)}") from exc
        if not spec.name:
            spec = spec.model_copy(update={"name": Path(path).stem})
        logger.info(f"Loaded scenario '{spec.name}' from {path}")
        return spec

    def save(self, obj: ScenarioSpec, path: PathLike, **kwargs: Any) -> Path:
        return self._write_json(path, obj.model_dump(mode="json", exclude_defaults=False))
