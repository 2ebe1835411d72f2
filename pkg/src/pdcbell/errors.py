"""Exception hierarchy for the toolkit."""


class PdcBellError(Exception):
    """Base class for all toolkit errors."""


class DomainError(PdcBellError, ValueError):
    """Input outside the mathematical domain of an operation."""


class DivisionError(DomainError):
    """Denominator of a ratio statistic is zero."""


class GridError(DomainError):
    """An angle scan does not contain the grid points an operation needs."""


class StatisticsError(PdcBellError):
    """A statistic came out numerically inconsistent (e.g. negative radicand)."""


class PostSelectionEmptyError(DomainError):
    """Post-selection removed all amplitude from the state."""


class SamplingError(PdcBellError):
    """The constrained model sampler could not produce an admissible model."""


class QuadratureError(PdcBellError):
    """Numerical integration failed to meet the requested tolerance."""


class ParseError(PdcBellError):
    """A data file violates the record schema.  Carries a location."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConflictError(ParseError):
    """Duplicate records for the same key."""
