"""Exception taxonomy shared across the package."""


class MaentireError(Exception):
    """Base class for all package errors."""


class InvalidMeasureError(MaentireError, ValueError):
    """A source measure violates its constraints (negative density, stray atoms, ...)."""


class DivergentTailError(InvalidMeasureError):
    """Tail exponent beta <= 2: the far-field mass excess diverges."""


class InternalConsistencyError(MaentireError, RuntimeError):
    """An invariant that should hold for valid inputs was violated internally."""


class ConstructionFailureError(MaentireError, RuntimeError):
    """A barrier construction could not be completed (e.g. bump escalation cap hit)."""


class UnsupportedDimensionError(MaentireError, ValueError):
    """Operation not defined for the requested space dimension."""


class DegenerateDomainError(MaentireError, ValueError):
    """Node set does not span the plane (all collinear, too few points)."""


class CoverageError(MaentireError, ValueError):
    """Grid does not cover a region or atom it must cover."""


class NonConvergenceError(MaentireError, RuntimeError):
    """Iteration budget exhausted before reaching the residual tolerance."""

    def __init__(self, message, residual_history=None, report=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])
        self.report = report


class InvariantViolationError(MaentireError, RuntimeError):
    """A mathematically guaranteed inequality failed beyond tolerance (solver or construction bug)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NormalizationError(MaentireError, RuntimeError):
    """Supporting-plane removal failed (origin not a vertex of the sampled function)."""


class DegenerateFitError(MaentireError, ValueError):
    """Least-squares design matrix is rank deficient (e.g. samples on a single circle)."""


class InsufficientDataError(MaentireError, ValueError):
    """Not enough annuli / samples for the requested estimate."""


class UsageError(MaentireError, ValueError):
    """Caller broke an interface contract (mismatched node sets, bad mode string, ...)."""


class ConfigError(MaentireError, ValueError):
    """Problem configuration failed validation; carries the offending field path."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")
