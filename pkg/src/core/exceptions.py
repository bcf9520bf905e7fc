from typing import Optional

from click import ClickException


class BaseError(ClickException):
    """
    Base of every error raised by the estimators and the file layer.

    Subclasses only set ``exit_code`` and ``detail``; the CLI prints
    ``Error: <detail>`` and exits with ``exit_code``:
        2 - the input does not satisfy a model invariant
        1 - a file could not be read or written
    """

    exit_code = 1
    detail = "Unexpected error"

    def __init__(self, detail: Optional[str] = None):
        if detail is not None:
            self.detail = detail
        super().__init__(self.detail)


class ValidationException(BaseError):
    exit_code = 2
    detail = "Validation error"


class NegativeCountException(ValidationException):
    detail = "Count matrix contains a negative cell"


class LabelMismatchException(ValidationException):
    detail = "Readout labels 1..K must equal state labels 1..K"


class EmptyControlRowException(ValidationException):
    detail = "Control row is empty (N0 = 0)"


class EmptyCaseBlockException(ValidationException):
    detail = "Case block is empty (N1 = 0)"


class EmptyStratumException(ValidationException):
    detail = "Stratum has no cases for the requested state"


class DomainErrorException(ValidationException):
    detail = "Argument outside its mathematical domain"


class ZeroDenominatorException(ValidationException):
    detail = "Readout has zero estimated marginal probability"


class DimensionMismatchException(ValidationException):
    detail = "Inconsistent dimensions"


class InvalidScenarioException(ValidationException):
    detail = "Invalid simulation scenario"


class ParseErrorException(ValidationException):
    detail = "Malformed input file"


class ReportIOException(BaseError):
    exit_code = 1
    detail = "File could not be read or written"
