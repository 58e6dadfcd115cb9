"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation (p < 1, trace != 1, ...)."""


class NotPSDError(ValueError):
    """A matrix required to be positive semidefinite has a negative eigenvalue.

    Attributes
    ----------
    eigenvalue : float
        The offending (most negative) eigenvalue.
    threshold : float
        The clamping threshold that was exceeded.
    """

    def __init__(self, eigenvalue, threshold, what="matrix"):
        self.eigenvalue = float(eigenvalue)
        self.threshold = float(threshold)
        super().__init__(
            f"{what} is not positive semidefinite: eigenvalue {self.eigenvalue:.3e} "
            f"< -{self.threshold:.3e}"
        )


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message, iterations=None):
        self.iterations = iterations
        super().__init__(message)


class ValidationError(ValueError):
    """A loaded object violates one of its invariants.

    ``invariant`` names the violated invariant so callers can report it.
    """

    def __init__(self, invariant, message):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")
