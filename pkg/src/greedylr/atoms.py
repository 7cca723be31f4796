"""Rank-1 atoms, support sets and the fully-corrective refit.

For a support ``L`` with stacked unit vectors ``U_L`` (``|L| x n``) and
``V_L`` (``|L| x d``) the set function is

    f(L) = max_H  l(U_L^T H V_L) - l(0)

and ``B^(L) = U_L^T H* V_L`` is the maximizer.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

UNIT_TOL = 1e-10


@dataclass(frozen=True)
class Atom:
    """A rank-1 direction ``u v^T`` with unit-norm factors."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).ravel()
        v = np.asarray(self.v, dtype=float).ravel()
        if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL or abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise ValueError("atom factors must have unit norm")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_vectors(cls, u, v):
        """Build an atom after normalizing ``u`` and ``v``."""
        u = np.asarray(u, dtype=float).ravel()
        v = np.asarray(v, dtype=float).ravel()
        return cls(u / np.linalg.norm(u), v / np.linalg.norm(v))

    def matrix(self):
        return np.outer(self.u, self.v)


@dataclass(frozen=True)
class SupportSet:
    """Ordered collection of atoms living in ``R^{n x d}``."""

    n: int
    d: int
    atoms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        atoms = tuple(self.atoms)
        for a in atoms:
            if a.u.shape != (self.n,) or a.v.shape != (self.d,):
                raise DimensionMismatch(
                    f"atom of shape ({a.u.size}, {a.v.size}) in a ({self.n}, {self.d}) support")
        object.__setattr__(self, "atoms", atoms)

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def __getitem__(self, i):
        return self.atoms[i]

    @property
    def U(self):
        if not self.atoms:
            return np.zeros((0, self.n))
        return np.vstack([a.u for a in self.atoms])

    @property
    def V(self):
        if not self.atoms:
            return np.zeros((0, self.d))
        return np.vstack([a.v for a in self.atoms])

    def extended(self, new_atoms):
        return SupportSet(self.n, self.d, self.atoms + tuple(new_atoms))

    # -- text format: one atom per line, u entries, "|", v entries --------

    def to_text(self):
        lines = []
        for a in self.atoms:
            left = " ".join(repr(float(x)) for x in a.u)
            right = " ".join(repr(float(x)) for x in a.v)
            lines.append(f"{left} | {right}\n")
        return "".join(lines)

    @classmethod
    def from_text(cls, text, n=None, d=None):
        atoms = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            left, sep, right = line.partition("|")
            if not sep:
                raise ValueError(f"malformed support line: {line!r}")
            u = np.array(left.split(), dtype=float)
            v = np.array(right.split(), dtype=float)
            atoms.append(Atom(u, v))
        if atoms:
            n = atoms[0].u.size if n is None else n
            d = atoms[0].v.size if d is None else d
        if n is None or d is None:
            raise ValueError("empty support text needs explicit dimensions")
        return cls(n, d, tuple(atoms))


@dataclass
class RefitSolution:
    H: np.ndarray
    B: np.ndarray
    f_value: float
    inner_iters: int = 0
    converged: bool = True


def _grad_h(obj, U, V, B):
    return U @ obj.gradient(B) @ V.T


def refit(L, obj, tol=1e-8, max_iter=10_000, warm_start=None):
    """Maximize ``l(U_L^T H V_L)`` over the coefficient matrix ``H``.

    Quadratic losses are solved in closed form. Everything else uses gradient
    ascent on ``H`` with a Barzilai-Borwein trial step and Armijo backtracking
    (halving). ``warm_start`` may be the previous ``H`` for a support that is a
    prefix of ``L``; it is padded with zeros.

    A run that exhausts ``max_iter`` returns the best iterate with
    ``converged=False`` instead of raising.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if (L.n, L.d) != (obj.n, obj.d):
        raise DimensionMismatch(f"support is {(L.n, L.d)}, objective is {(obj.n, obj.d)}")
    k = len(L)
    zero_value = obj.zero_value
    if k == 0:
        return RefitSolution(np.zeros((0, 0)), np.zeros((obj.n, obj.d)), 0.0)
    U, V = L.U, L.V

    H = obj.closed_form_coefficients(U, V)
    if H is not None:
        B = U.T @ H @ V
        return RefitSolution(H, B, float(obj.value(B) - zero_value), 0, True)

    H = np.zeros((k, k))
    if warm_start is not None:
        w = np.asarray(warm_start, dtype=float)
        H[: w.shape[0], : w.shape[1]] = w
    B = U.T @ H @ V
    val = obj.value(B)
    g = _grad_h(obj, U, V, B)
    step = 1.0 / obj.smoothness_hint if obj.smoothness_hint else 1.0
    H_prev = g_prev = None
    it = 0
    converged = False
    while True:
        gnorm2 = float(np.sum(g * g))
        if np.sqrt(gnorm2) <= tol * (1.0 + abs(val - zero_value)):
            converged = True
            break
        if it >= max_iter:
            break
        if H_prev is not None:
            s = H - H_prev
            yk = g_prev - g  # ascent: -(change in gradient) is positive curvature
            sy = float(np.sum(s * yk))
            if sy > 0:
                step = float(np.sum(s * s)) / sy
        # below this change in l the Armijo test is rounding noise
        noise = 8 * np.finfo(float).eps * (1.0 + abs(val))
        t = step
        while True:
            H_new = H + t * g
            B_new = U.T @ H_new @ V
            val_new = obj.value(B_new)
            g_new = _grad_h(obj, U, V, B_new)
            if val_new >= val + 1e-4 * t * gnorm2:
                break
            if abs(val_new - val) <= noise and np.sum(g_new * g_new) < gnorm2:
                break
            t *= 0.5
            if t < 1e-20:
                break
        if t < 1e-20:
            # stalled at machine precision
            break
        H_prev, g_prev = H, g
        H, B, val, g = H_new, B_new, val_new, g_new
        it += 1
    return RefitSolution(H, B, float(val - zero_value), it, converged)


def set_value(L, obj, **kwargs):
    """``f(L)``; a thin wrapper over :func:`refit`."""
    return refit(L, obj, **kwargs).f_value
