from __future__ import annotations


class DsfcError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DsfcError, ValueError):
    pass


class DomainError(DsfcError, ValueError):
    pass


class NotPositiveDefiniteError(DsfcError, ValueError):
    pass


class DegenerateBasisError(DsfcError, ValueError):
    pass


class StabilizabilityError(DsfcError):
    pass


class BasisInsufficientError(DsfcError):
    pass


class ConfigurationError(DsfcError, ValueError):
    pass


class UsageError(DsfcError, ValueError):
    pass


class NonAffineError(DsfcError, TypeError):
    pass


class InfeasibleError(DsfcError):
    """A synthesis step found no certificate."""
