"""Exception types shared across the package."""


class PencurveError(Exception):
    """Base class for all library errors."""


class ParseError(PencurveError):
    """Malformed measure or curve input; carries the offending line/record."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class ConfigError(PencurveError):
    """Invalid parameter combination (e.g. p < 1, lambda <= 0)."""


class DimensionMismatchError(PencurveError):
    """Objects with incompatible ambient dimensions."""


class NonSmoothPointError(PencurveError):
    """Gradient requested at a p=1 kink (atom coincides with its target).

    Use stationarity_report, which handles tied vertices via the
    subgradient inequality.
    """


class BudgetExceededError(PencurveError):
    """Oracle search refused; .required estimates the needed budget."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class NumericError(PencurveError):
    """Non-finite value encountered during optimization."""
