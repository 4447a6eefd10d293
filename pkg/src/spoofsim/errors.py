"""Exception types shared across the bench."""


class ValidationError(ValueError):
    """Raised when a segment, config or input array is out of range or malformed."""


class NumericalFault(RuntimeError):
    """Raised when the filter hits a non-finite input or numerical breakdown."""


class DetectorError(ArithmeticError):
    """Raised when a detector statistic cannot be evaluated for an epoch."""
