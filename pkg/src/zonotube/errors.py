"""Exception hierarchy shared by the set, optimization and synthesis layers."""


class SetError(ValueError):
    """Base class for invalid set operations."""


class DimensionMismatchError(SetError):
    pass


class EmptySetError(SetError):
    pass


class ProjectionBudgetError(SetError):
    """Fourier-Motzkin projection refused because the generator count is too large.

    Callers should fall back to support-function queries.
    """


class GaugeDomainError(SetError):
    """The set is not a proper C-set around the origin (nonzero center or no interior)."""


class InfeasibleError(RuntimeError):
    """An optimization-backed construction has no solution.

    ``reason`` is a short machine-readable tag (``observer_infeasible``, ...).
    """

    def __init__(self, message, reason="infeasible", step=None):
        super().__init__(message)
        self.reason = reason
        self.step = step


class ConfigError(ValueError):
    """An experiment config or gains file failed validation."""
