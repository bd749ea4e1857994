"""Exception types shared across the package."""


class QuadlandError(Exception):
    """Base class for all package errors."""


class InvalidArgument(QuadlandError):
    """Bad input: dimension mismatch, out-of-range parameter, malformed file."""


class DegenerateDistribution(InvalidArgument):
    """Distribution with Var(X^2) = 0; barrier constants vanish."""


class ContractViolation(QuadlandError):
    """An internal guarantee failed at runtime (e.g. monotone descent)."""


class NonfiniteValue(QuadlandError):
    """A risk or gradient evaluation produced NaN or infinity."""
