"""Exception types shared across the package."""

__all__ = ["ValidationError", "NumericError"]


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition."""


class NumericError(RuntimeError):
    """Raised when a numerical routine cannot produce a trustworthy result."""
