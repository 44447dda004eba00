"""Exception and warning types shared across the package."""


class OsdprrError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(OsdprrError, ValueError):
    """A parameter lies outside its documented domain."""


class DegeneratePriorError(OsdprrError, ValueError):
    """A prior probability of 0 or 1 makes the requested odds ratio undefined."""


class DegenerateDependencyError(OsdprrError, ValueError):
    """A dependency parameter makes the requested quantity collapse to certainty."""


class DimensionTooLargeError(OsdprrError, ValueError):
    """The requested exact computation would enumerate too many states."""


class ZeroProbabilityEvidenceError(OsdprrError, ValueError):
    """The conditioning event has probability zero under the scenario."""


class TraceParseError(OsdprrError, ValueError):
    """An occupancy CSV failed validation.

    ``line_number`` is 1-based and counts the header line, matching what an
    editor shows for the offending row.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class InsufficientDataWarning(UserWarning):
    """An empirical estimate had an empty conditioning cell before smoothing."""


class InconsistentEstimateWarning(UserWarning):
    """Estimated marginals and conditionals disagree beyond tolerance."""
