"""Greedy low-rank matrix estimation by rank-1 atom selection."""
from .atoms import Atom, RefitSolution, SupportSet, refit, set_value
from .errors import (AllGainsNonpositive, Converged, DenominatorZero, DimensionMismatch,
                     EmptyPool, GreedyLRError, NonConverged, SingularDesign, ZeroMatrix)
from .objective import (BinomialCounts, CurvaturePair, LinearMeasurements, LogisticPCA,
                        Objective, QuadraticFull, quadratic_curvature)
from .solvers import (GECO_TAU, GREEDY_TAU, SolverConfig, run_distributed_greedy, run_geco,
                      run_greedy)

__all__ = [
    "Atom", "SupportSet", "RefitSolution", "refit", "set_value",
    "Objective", "QuadraticFull", "LinearMeasurements", "LogisticPCA", "BinomialCounts",
    "CurvaturePair", "quadratic_curvature",
    "SolverConfig", "run_greedy", "run_geco", "run_distributed_greedy", "GECO_TAU", "GREEDY_TAU",
    "GreedyLRError", "DimensionMismatch", "ZeroMatrix", "NonConverged", "SingularDesign",
    "Converged", "AllGainsNonpositive", "EmptyPool", "DenominatorZero",
]
