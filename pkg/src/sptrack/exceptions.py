"""Exception hierarchy shared by all sptrack modules."""


class SptrackError(Exception):
    """Base class for all library-raised errors."""


class GridMismatchError(SptrackError):
    """Two covariance objects do not share the same time grid / block layout."""


class ConditioningError(SptrackError):
    """A matrix factorization or solve failed (singular / indefinite input)."""


class InsufficientDataError(SptrackError):
    """Not enough samples in the window for the requested operation."""


class OptimizationError(SptrackError):
    """Hyperparameter search produced no finite objective value."""


class OrderingError(SptrackError):
    """Measurements were pushed with non-increasing time indices."""


class ConfigError(SptrackError):
    """An experiment or tracker configuration violates an invariant."""
