"""Numerical checks of the approximation, recovery and curvature guarantees
for greedy rank-1 selection."""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .atoms import Atom, SupportSet, refit, set_value
from .errors import DenominatorZero, ZeroMatrix
from .linalg import project_rowcol, sequential_orthogonalize, top_singular_pair
from .objective import quadratic_curvature
from .solvers import GECO_TAU, run_geco

REL_SLACK = 1e-6


@dataclass
class BoundReport:
    """Outcome of one inequality check.

    ``slack`` is positive when the inequality is satisfied, whatever its
    direction: ``lhs - rhs`` for ``lhs >= rhs`` checks and ``rhs - lhs`` for
    ``lhs <= rhs`` checks.
    """

    lhs: float
    rhs: float
    holds: bool
    slack: float
    name: str = ""
    sense: str = ">="
    vacuous: bool = False


def at_least(lhs, rhs, name="", abs_tol=None):
    tol = REL_SLACK * (1 + abs(rhs)) if abs_tol is None else abs_tol
    return BoundReport(float(lhs), float(rhs), lhs >= rhs - tol, float(lhs - rhs), name, ">=")


def at_most(lhs, rhs, name="", abs_tol=None):
    tol = REL_SLACK * (1 + abs(rhs)) if abs_tol is None else abs_tol
    return BoundReport(float(lhs), float(rhs), lhs <= rhs + tol, float(rhs - lhs), name, "<=")


def orthonormal_support(atoms, n, d, drop_tol=1e-8):
    return SupportSet(n, d, tuple(sequential_orthogonalize(atoms, (), drop_tol)))


def submodularity_ratio(obj, L, S, refit_tol=1e-10):
    """``sum_j [f(L+j) - f(L)] / (f(L+S) - f(L))`` with ``S`` orthogonalized against ``L``.

    ``L`` is orthonormalized first if it is not already.

    Raises
    ------
    DenominatorZero
        If the joint gain is at most 1e-12.
    """
    L = orthonormal_support(list(L), obj.n, obj.d)
    S = sequential_orthogonalize(list(S), L)
    if not S:
        raise DenominatorZero("S is empty after orthogonalization")
    f_L = set_value(L, obj, tol=refit_tol)
    num = sum(set_value(L.extended([a]), obj, tol=refit_tol) - f_L for a in S)
    den = set_value(L.extended(S), obj, tol=refit_tol) - f_L
    if den <= 1e-12:
        raise DenominatorZero(f"joint gain {den:.3g}")
    return num / den


def aligned_atoms(obj, L, r, seed=0):
    """``r`` atoms aligned with the gradient at ``B^(L)``.

    These are the top singular pairs of ``(I - P_U) G (I - P_V)``, with ``G``
    the gradient at the refit of ``L``. For such ``S`` the off-diagonal
    ``S x S`` gradient blocks vanish, which is the case the curvature lower
    bound on the submodularity ratio actually covers.
    """
    L = orthonormal_support(list(L), obj.n, obj.d)
    G = obj.gradient(refit(L, obj, tol=1e-12).B)
    U, V = L.U, L.V
    R = G - U.T @ (U @ G) - (G @ V.T) @ V + U.T @ (U @ G @ V.T) @ V
    atoms = []
    for i in range(r):
        try:
            sigma, u, v = top_singular_pair(R, tol=1e-12, max_iter=200_000, seed=seed + i)
        except ZeroMatrix:
            break
        atoms.append(Atom(u, v))
        R = R - sigma * np.outer(u, v)
    return atoms


def approx_bound(tau, ratio, k, r, squared_tau=False):
    """``1 - exp(-c)`` with ``c = tau * ratio * k / r`` (``tau**2`` if ``squared_tau``)."""
    if tau <= 0 or ratio <= 0 or r <= 0 or k < 0:
        raise ValueError("tau, ratio, r must be positive and k nonnegative")
    t = tau * tau if squared_tau else tau
    return 1.0 - math.exp(-t * ratio * k / r)


def svd_truncation_oracle(Y, r, tol=1e-12):
    """Best rank-``r`` value ``sum_{i<=r} sigma_i(Y)^2`` of the full quadratic.

    Computed by repeated top singular pairs with deflation. Returns
    ``(f_opt, atoms)``.
    """
    Y = np.array(Y, dtype=float)
    if r > min(Y.shape):
        raise ValueError("r exceeds min(n, d)")
    f_opt = 0.0
    atoms = []
    R = Y.copy()
    for i in range(r):
        try:
            sigma, u, v = top_singular_pair(R, tol=tol, max_iter=1_000_000, seed=i)
        except ZeroMatrix:
            break
        f_opt += sigma * sigma
        atoms.append(Atom(u, v))
        R -= sigma * np.outer(u, v)
    return f_opt, atoms


def restricted_optimum(obj, pool, r, refit_tol=1e-8):
    """Brute-force best ``f`` over all size-``r`` subsets of a small pool.

    This is an optimum over the pool only (a "restricted optimum"), not the
    continuous rank-``r`` optimum. Returns ``(value, subset_indices)``.
    """
    if len(pool) > 12 or r > 3:
        raise ValueError("brute force is limited to pools of <= 12 atoms and r <= 3")
    best, best_idx = 0.0, ()
    for idx in itertools.combinations(range(len(pool)), r):
        S = orthonormal_support([pool[i] for i in idx], obj.n, obj.d)
        val = set_value(S, obj, tol=refit_tol)
        if val > best:
            best, best_idx = val, idx
    return best, best_idx


def check_geco_guarantee(obj, cfg, r, oracle_opt, ratio=None):
    """Run GECO for ``cfg.k`` steps and check ``f(S_k) >= (1 - e^{-c3}) f(S*)``.

    ``ratio`` defaults to ``m / M`` from :func:`quadratic_curvature`; a
    :class:`SingularDesign` error propagates.
    """
    if ratio is None:
        ratio = quadratic_curvature(obj).ratio
    tau = cfg.tau_or(GECO_TAU)
    _, sol, _ = run_geco(obj, cfg)
    bound = approx_bound(tau, ratio, cfg.k, r, squared_tau=True)
    return at_least(sol.f_value, bound * oracle_opt, "thm3")


def spectral_norm(G, tol=1e-10):
    try:
        sigma, _, _ = top_singular_pair(G, tol=tol, max_iter=1_000_000)
    except ZeroMatrix:
        return 0.0
    return sigma


def recovery_rhs(obj, B_r, m, C, k, r):
    g2 = spectral_norm(obj.gradient(B_r)) ** 2
    gap = obj.value(B_r) - obj.zero_value
    return 4.0 * (k + r) * g2 / m ** 2 + 4.0 * (1.0 - C) / m * gap


def check_recovery_bound(obj, B_k, B_r, m, C, k, r):
    """``|B_k - B_r|_F^2 <= 4(k+r)|grad l(B_r)|_2^2/m^2 + 4(1-C)/m [l(B_r) - l(0)]``.

    ``|.|_2`` is the spectral norm.
    """
    if m <= 0:
        raise ValueError("m must be positive")
    if not 0 <= C <= 1:
        raise ValueError("C must lie in [0, 1]")
    diff = np.asarray(B_k) - np.asarray(B_r)
    lhs = float(np.sum(diff * diff))
    return at_most(lhs, recovery_rhs(obj, B_r, m, C, k, r), "thm4")


def check_subadditivity_lemmas(obj, S, curvature):
    """Sandwich ``g/(2M) <= f(S) <= g/(2m)`` with ``g = |P_U grad l(0) P_V|_F^2``.

    Returns ``(lower_report, upper_report)``.
    """
    if len(S) == 0:
        return at_least(0.0, 0.0, "sandwich-lower"), at_most(0.0, 0.0, "sandwich-upper")
    G0 = obj.gradient(np.zeros((obj.n, obj.d)))
    P = project_rowcol(G0, S.U, S.V)
    g = float(np.sum(P * P))
    f = set_value(S, obj, tol=1e-12)
    return (at_least(f, g / (2 * curvature.M), "sandwich-lower"),
            at_most(f, g / (2 * curvature.m), "sandwich-upper"))


def check_greedy_lemma(history, f_opt, tau, gamma, r, abs_tol=1e-6):
    """Per-iteration ``A(i+1) >= (tau * gamma / r) B(i)`` for a Greedy run."""
    vals = history.values
    reports = []
    for i in range(len(vals) - 1):
        gain = vals[i + 1] - vals[i]
        reports.append(at_least(gain, tau * gamma / r * (f_opt - vals[i]),
                                f"lemma-greedy[{i}]", abs_tol=abs_tol))
    return reports


def check_geco_lemma(history, f_opt, tau, m, M, r, abs_tol=1e-6):
    """Per-iteration ``D(i+1) >= (tau^2 m / (r M)) B(i)`` for a GECO run."""
    vals = history.values
    reports = []
    for i in range(len(vals) - 1):
        gain = vals[i + 1] - vals[i]
        reports.append(at_least(gain, tau * tau * m / (r * M) * (f_opt - vals[i]),
                                f"lemma-geco[{i}]", abs_tol=abs_tol))
    return reports


def greedy_bounds_post_hoc(obj, support, r, tau, oracle_atoms, curvature=None):
    """Both greedy approximation constants for a finished run.

    ``gamma`` is the submodularity ratio of the returned support with respect
    to the oracle atoms, evaluated after the fact; ``m/M`` gives the
    conservative version. Returns a dict with ``gamma``, ``c1_bound`` and,
    when curvature is available, ``c2_bound``.
    """
    k = len(support)
    out = {}
    try:
        gamma = submodularity_ratio(obj, support, oracle_atoms)
    except DenominatorZero:
        gamma = math.inf
    out["gamma"] = gamma
    out["c1_bound"] = approx_bound(tau, gamma, k, r) if math.isfinite(gamma) and gamma > 0 else 1.0
    if curvature is not None:
        out["c2_bound"] = approx_bound(tau, curvature.ratio, k, r)
    return out
