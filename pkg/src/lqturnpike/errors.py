"""Exception types shared across the package."""


class LqTurnpikeError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(LqTurnpikeError, ValueError):
    """Matrix or vector dimensions are inconsistent."""


class NonFiniteError(LqTurnpikeError, ValueError):
    """An input contains NaN or infinite entries."""


class ResolventError(LqTurnpikeError, ValueError):
    """The resolvent scaling parameter k is invalid (kI - A is singular
    or k does not exceed the spectral abscissa of A)."""


class UniquenessError(LqTurnpikeError):
    """The stationary KKT system is rank deficient, so the optimal triple
    is not unique."""

    def __init__(self, message, rank=None, full_rank=None):
        super().__init__(message)
        self.rank = rank
        self.full_rank = full_rank


class NotStabilizableError(LqTurnpikeError):
    """No stable invariant subspace of the expected dimension exists, so
    the algebraic Riccati equation has no stabilizing solution."""


class ConvergenceError(LqTurnpikeError):
    """An iterative refinement failed to reach the requested tolerance."""


class IntegrationError(LqTurnpikeError):
    """A time integration diverged (norm blow-up)."""


class TruncationError(LqTurnpikeError):
    """A truncation horizon is too short for the requested accuracy."""


class GridMismatchError(LqTurnpikeError, ValueError):
    """Sampled data does not live on the expected time grid."""


class UndefinedRateError(LqTurnpikeError, ValueError):
    """A decay rate cannot be fitted (e.g. the series is identically zero)."""


class ProblemSizeError(LqTurnpikeError):
    """A direct solve would exceed the configured memory cap."""


class ConfigError(LqTurnpikeError, ValueError):
    """An experiment configuration is malformed or violates an invariant."""
