"""Exception types shared across the package."""


class CislunarError(Exception):
    """Base class for all package errors."""


class SingularityError(CislunarError):
    """State fell inside the exclusion radius of one of the primaries."""


class PropagationError(CislunarError):
    """Numerical integration failed (non-finite state, step underflow)."""


class CorrectionError(CislunarError):
    """Differential correction did not converge."""


class GeometryError(CislunarError):
    """Degenerate observation geometry (coincident observer and target)."""


class ConditioningError(CislunarError):
    """A linear solve encountered a numerically singular matrix."""


class ValidationError(CislunarError):
    """Scenario or catalog input failed validation."""


class InfeasibleError(CislunarError):
    """Tasking constraints admit no feasible allocation."""


class ConditioningWarning(UserWarning):
    """A matrix in a solve was ill conditioned; the result may have lost digits."""
