import logging
import sys
from typing import Optional

from pydantic import ValidationError

from app.core.config import settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class ContourOptError(Exception):
    """Base class for all library errors. `exit_code` is used by the CLI."""
    exit_code = EXIT_FAILURE


# --- usage / input errors (exit 2) ---------------------------------------

class ConfigurationError(ContourOptError):
    """Invalid run configuration or missing mandatory setting."""
    exit_code = EXIT_USAGE


class DataSetError(ContourOptError):
    """Problem with an input data file."""
    exit_code = EXIT_USAGE


class DataSetNotFound(DataSetError):
    """Dataset path does not exist."""
    pass


class EmptyDataSet(DataSetError):
    """Dataset contains no rows."""
    pass


class DimensionMismatch(DataSetError):
    """Column count or point dimension differs from what is expected."""
    pass


class DataParseError(DataSetError):
    """A cell could not be parsed as a number."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None):
        super().__init__(message)
        self.row = row
        self.column = column


class NonFiniteValue(DataParseError):
    """A cell holds NaN or infinity."""
    pass


class CaseValidationError(ContourOptError):
    """Grid case file does not match the schema."""
    exit_code = EXIT_USAGE


# --- computational errors (exit 1) ---------------------------------------

class InfeasibleSamplingPlan(ContourOptError):
    """No sample size reaches the requested probability."""
    pass


class SolverError(ContourOptError):
    """The QP solver did not return an optimal solution."""

    def __init__(self, message: str, status: Optional[str] = None):
        super().__init__(message)
        self.status = status


class SingularNetworkError(ContourOptError):
    """Reduced susceptance matrix is singular (network disconnected)."""
    pass


class SingularJacobianError(ContourOptError):
    """Implicit-function Jacobian is singular or too ill-conditioned."""

    def __init__(self, message: str, condition_number: float = float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class PreconditionError(ContourOptError):
    """A theorem precondition required by an analysis routine does not hold."""
    pass


class PipelineStageError(ContourOptError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", EXIT_FAILURE)


def format_validation_error(exc: ValidationError) -> str:
    """Render a pydantic error with its field path, e.g. 'branches.2.susceptance: ...'."""
    parts = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err.get("loc", ()))
        parts.append(f"{path or '<root>'}: {err.get('msg')}")
    return "; ".join(parts)


def handle_cli_exception(exc: BaseException, stream=None) -> int:
    """Log an exception, write a one-line message to stderr and return the exit code."""
    stream = stream or sys.stderr

    if isinstance(exc, ValidationError):
        message = format_validation_error(exc)
        logger.error(f"Validation Error: {message}")
        print(f"error: {message}", file=stream)
        return EXIT_USAGE

    if isinstance(exc, ContourOptError):
        logger.error(f"{type(exc).__name__}: {exc}")
        if settings.DEBUG:
            print(f"error ({type(exc).__name__}): {exc}", file=stream)
        else:
            print(f"error: {exc}", file=stream)
        return exc.exit_code

    logger.error(f"Unhandled Exception: {str(exc)}", exc_info=True)
    if settings.DEBUG:
        print(f"error ({type(exc).__name__}): {exc}", file=stream)
    else:
        print("error: an unexpected error occurred", file=stream)
    return EXIT_FAILURE
