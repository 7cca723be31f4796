"""Exception types shared across the package."""


class GreedyLRError(Exception):
    pass


class DimensionMismatch(GreedyLRError, ValueError):
    pass


class ZeroMatrix(GreedyLRError):
    """Raised when a matrix is numerically zero and has no top singular pair."""


class NonConverged(GreedyLRError):
    pass


class SingularDesign(GreedyLRError):
    """The smallest Gram eigenvalue is too small to give a usable curvature.

    ``M`` holds the smoothness estimate, which is still valid.
    """

    def __init__(self, message, M=None):
        super().__init__(message)
        self.M = M


class Converged(GreedyLRError):
    """No further progress is possible (zero gradient or no positive gain)."""


class AllGainsNonpositive(Converged):
    pass


class EmptyPool(GreedyLRError, ValueError):
    pass


class DenominatorZero(GreedyLRError):
    """Joint gain is zero, so the submodularity ratio is undefined."""
