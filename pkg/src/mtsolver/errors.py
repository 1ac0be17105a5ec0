"""Exception and warning types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class SingularMatrixError(ValueError):
    """Raised when a matrix is numerically singular."""


class NonConvergenceError(RuntimeError):
    """Raised when a state is too far from the solution ray to reconstruct x."""


class GenerationError(RuntimeError):
    """Raised when random instance generation exhausts its resampling budget."""


class ResourceLimitError(MemoryError):
    """Raised when a simulation would exceed the supported register size."""


class AmbiguityError(ValueError):
    """Raised when the observable does not have a one-dimensional null space."""


class InsufficientDataError(ValueError):
    """Raised when too few data points are available for a fit."""


class ResolutionWarning(UserWarning):
    """The pointer register is too small to separate the two lowest eigenvalues."""
