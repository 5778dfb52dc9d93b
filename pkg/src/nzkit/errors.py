"""Exception types shared across the package."""


class NZError(Exception):
    """Base class for all package errors."""


class ValidationError(NZError, ValueError):
    """Malformed input: wrong shapes, broken invariants, bad configuration."""


class NumericalError(NZError, ArithmeticError):
    """A numerical procedure failed or exceeded its residual budget."""
