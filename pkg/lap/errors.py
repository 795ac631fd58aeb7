"""Exceptions raised by the lap package.

Every error is a ``ValueError`` so callers that only care about bad input can
catch the builtin; the CLI catches ``LapError`` and maps it to exit code 2.
"""


class LapError(ValueError):
    """Base class for all library errors."""


class InvalidDistribution(LapError):
    pass


class InvalidInstance(LapError):
    pass


class ZeroProbabilityCondition(LapError):
    def __init__(self, message="zero-probability condition"):
        super().__init__(message)


class NonMonotoneSchedule(LapError):
    def __init__(self, message="non-monotone schedule"):
        super().__init__(message)


class RequiresIndependence(LapError):
    def __init__(self, message="requires independence"):
        super().__init__(message)


class InstanceTooLarge(LapError):
    pass


class ConstraintViolation(LapError):
    pass


class InfeasibleGrid(LapError):
    pass


class ZeroBenchmark(LapError):
    def __init__(self, message="benchmark revenue must be positive"):
        super().__init__(message)


class UsageError(LapError):
    """Bad command-line flags or configuration."""
