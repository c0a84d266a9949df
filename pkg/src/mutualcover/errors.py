"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the region where a transform or exponent is defined."""


class ConvergenceError(RuntimeError):
    """Root finder failed to reach tolerance."""


class UnsupportedDriftError(ValueError):
    """Ladder construction requested for a line with non-positive drift."""


class NetProfitError(ValueError):
    """Operation requires the net profit condition, which fails for the model."""


class PreconditionError(ValueError):
    """Model does not have the structure an operation assumes."""
