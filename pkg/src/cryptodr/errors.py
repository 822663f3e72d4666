"""Exception hierarchy.

Every error raised by the package derives from :class:`AnalysisError`. The
three direct subclasses map to CLI exit codes.
"""
from __future__ import annotations


class AnalysisError(Exception):
    exit_code = 3


class ConfigError(AnalysisError):
    exit_code = 1


class DataError(AnalysisError):
    exit_code = 2


class NumericError(AnalysisError):
    exit_code = 3


# -- market data -------------------------------------------------------------

class FormatError(DataError):
    """CSV header does not match the expected layout."""


class RowError(DataError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateDateError(DataError):
    def __init__(self, line: int, date):
        super().__init__(f"line {line}: duplicate date {date}")
        self.line = line
        self.date = date


class EmptyPanelError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class EmptyWindowError(DataError):
    pass


class AlignmentError(DataError):
    """Column names or shapes do not line up with what a model was fitted on."""


# -- numerics ----------------------------------------------------------------

class ShapeError(NumericError):
    pass


class DomainError(NumericError):
    pass


class DegenerateColumnError(NumericError):
    def __init__(self, column: str, message: str = "zero variance on the fit window"):
        super().__init__(f"column {column!r}: {message}")
        self.column = column


class SymmetryError(NumericError):
    pass


class ConvergenceError(NumericError):
    pass


class NotPositiveDefiniteError(NumericError):
    def __init__(self, pivot: int, message: str | None = None):
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")
        self.pivot = pivot


class SingularMatrixError(NumericError):
    pass


class UndefinedEntryError(NumericError):
    pass


class OrientationError(NumericError):
    pass


class StageError(AnalysisError):
    """Wraps an upstream error with the pipeline stage where it happened."""

    def __init__(self, stage: str, cause: AnalysisError):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code
