"""
Exception hierarchy for exprtune.

Every error also derives from ``ValueError`` so callers that only know
about built-in exceptions can still catch them.
"""


class ExprTuneError(ValueError):
    """Base class for all errors raised by exprtune."""


class ExpressionSyntaxError(ExprTuneError):
    """Malformed expression text, or a construct not allowed in the dialect."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvaluationError(ExprTuneError):
    """An expression could not be evaluated in the given environment."""


class ProblemError(ExprTuneError):
    pass


class SolverError(ExprTuneError):
    pass


class ConfigurationError(ExprTuneError):
    pass


class OutputError(ExprTuneError):
    pass
