"""Exception types shared across the package."""


class QnetoptError(Exception):
    """Base class for all package errors."""


class DomainError(QnetoptError):
    """A value lies outside its declared parameter domain."""


class InsufficientDataError(QnetoptError):
    """Too few rows for the requested training or validation scheme."""


class ConvergenceError(QnetoptError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


class EvaluationError(QnetoptError):
    """An objective run failed; carries the offending config and run index."""

    def __init__(self, message: str, config=None, run_index: int = -1):
        super().__init__(message)
        self.config = config
        self.run_index = run_index


class ExternalObjectiveError(QnetoptError):
    """An external objective process misbehaved; carries diagnostics."""

    def __init__(self, message: str, diagnostics: str = ""):
        super().__init__(message)
        self.diagnostics = diagnostics


class DegenerateSampleError(QnetoptError):
    """A sample is too small or too degenerate for the requested statistic."""


class EmptyReportError(QnetoptError):
    """No dominating records to summarize."""


class ConfigFileError(QnetoptError):
    """A study config file failed to parse or validate."""
