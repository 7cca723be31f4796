"""Concave matrix-variate objectives and curvature estimates.

Every objective maps an ``n x d`` matrix ``Theta`` to a real number and
exposes its gradient. They are immutable after construction.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, SingularDesign


class Objective:
    """Base class. Subclasses implement ``value`` and ``gradient``."""

    n: int
    d: int
    #: upper bound on the curvature of ``l`` along unit directions, if known
    smoothness_hint = None

    def value(self, theta):
        raise NotImplementedError

    def gradient(self, theta):
        raise NotImplementedError

    @property
    def shape(self):
        return (self.n, self.d)

    @property
    def zero_value(self):
        cached = getattr(self, "_zero_value", None)
        if cached is None:
            cached = float(self.value(np.zeros((self.n, self.d))))
            object.__setattr__(self, "_zero_value", cached)
        return cached

    def closed_form_coefficients(self, U, V):
        """Exact maximizer ``H`` of ``l(U^T H V)``, or None if unavailable."""
        return None

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n, self.d):
            raise DimensionMismatch(f"expected {(self.n, self.d)}, got {theta.shape}")
        return theta


class QuadraticFull(Objective):
    """``l(Theta) = -|Y - Theta|_F^2``."""

    smoothness_hint = 2.0

    def __init__(self, Y):
        self.Y = np.array(Y, dtype=float)
        if self.Y.ndim != 2:
            raise DimensionMismatch("Y must be a matrix")
        self.n, self.d = self.Y.shape

    def value(self, theta):
        r = self.Y - self._check(theta)
        return -float(np.sum(r * r))

    def gradient(self, theta):
        return 2.0 * (self.Y - self._check(theta))

    def closed_form_coefficients(self, U, V):
        k = U.shape[0]
        if np.allclose(U @ U.T, np.eye(k), atol=1e-12) and np.allclose(V @ V.T, np.eye(k), atol=1e-12):
            return U @ self.Y @ V.T
        return np.linalg.pinv(U.T) @ self.Y @ np.linalg.pinv(V)


class LinearMeasurements(Objective):
    """``l(Theta) = -(1/n) |y - phi(Theta)|^2`` with ``phi(Theta)_i = <X_i, Theta>``.

    ``X`` has shape ``(n_samples, m1, m2)``.
    """

    def __init__(self, X, y):
        X = np.array(X, dtype=float)
        y = np.array(y, dtype=float).ravel()
        if X.ndim != 3 or X.shape[0] != y.size:
            raise DimensionMismatch("X must be (n_samples, m1, m2) with one response per sample")
        self.X = X
        self.y = y
        self.n_samples, self.n, self.d = X.shape
        self.A = X.reshape(self.n_samples, -1)

    @classmethod
    def from_design(cls, A, y, shape):
        """Build from a flattened ``n_samples x (m1*m2)`` design matrix."""
        A = np.asarray(A, dtype=float)
        return cls(A.reshape((A.shape[0],) + tuple(shape)), y)

    def measure(self, theta):
        return self.A @ self._check(theta).ravel()

    def value(self, theta):
        r = self.y - self.measure(theta)
        return -float(r @ r) / self.n_samples

    def gradient(self, theta):
        r = self.y - self.measure(theta)
        return (2.0 / self.n_samples) * (self.A.T @ r).reshape(self.n, self.d)

    def closed_form_coefficients(self, U, V):
        # features F[i, (a, b)] = u_a^T X_i v_b
        F = np.einsum("an,snd,bd->sab", U, self.X, V).reshape(self.n_samples, -1)
        h, *_ = np.linalg.lstsq(F, self.y, rcond=None)
        return h.reshape(U.shape[0], V.shape[0])

    def gram(self):
        return self.A.T @ self.A


def softplus(x):
    """``log(1 + e^x)`` computed as ``max(x, 0) + log1p(e^-|x|)``."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


class _Bernoulli(Objective):
    # log-likelihood <Theta, T> - sum softplus(Theta); curvature <= 1/4
    smoothness_hint = 0.25

    def __init__(self, T):
        self.T = np.array(T, dtype=float)
        if self.T.ndim != 2:
            raise DimensionMismatch("data must be a matrix")
        self.n, self.d = self.T.shape

    def value(self, theta):
        theta = self._check(theta)
        return float(np.sum(theta * self.T) - np.sum(softplus(theta)))

    def gradient(self, theta):
        return self.T - expit(self._check(theta))


class LogisticPCA(_Bernoulli):
    """Bernoulli log-likelihood of a binary matrix under natural parameters."""

    def __init__(self, X):
        super().__init__(X)
        if not np.all((self.T == 0) | (self.T == 1)):
            raise ValueError("LogisticPCA needs a {0,1} matrix")


class BinomialCounts(_Bernoulli):
    """Bernoulli log-likelihood with mean targets ``P`` in ``[0, 1]``.

    Used on a normalized count matrix ``p(w, c) / p(w)``. Reduces to
    :class:`LogisticPCA` when ``P`` is binary.
    """

    def __init__(self, P):
        super().__init__(P)
        if np.any(self.T < 0) or np.any(self.T > 1):
            raise ValueError("BinomialCounts needs entries in [0, 1]")


def check_gradient(obj, theta, h=1e-5):
    """Largest entrywise ``|analytic - central difference| / (1 + |analytic|)``."""
    if h <= 0:
        raise ValueError("h must be positive")
    theta = np.array(theta, dtype=float)
    analytic = obj.gradient(theta)
    worst = 0.0
    for idx in np.ndindex(theta.shape):
        old = theta[idx]
        theta[idx] = old + h
        up = obj.value(theta)
        theta[idx] = old - h
        down = obj.value(theta)
        theta[idx] = old
        numeric = (up - down) / (2 * h)
        err = abs(analytic[idx] - numeric) / (1.0 + abs(analytic[idx]))
        worst = max(worst, err)
    return worst


@dataclass(frozen=True)
class CurvaturePair:
    """Strong-concavity lower estimate ``m`` and smoothness upper estimate ``M``."""

    m: float
    M: float

    def __post_init__(self):
        if not (0 < self.m <= self.M):
            raise ValueError(f"need 0 < m <= M, got m={self.m}, M={self.M}")

    @property
    def ratio(self):
        return self.m / self.M


def quadratic_curvature(loss, eig_floor=1e-12):
    """Full-space curvature of a quadratic loss.

    ``m = (2/n) lambda_min(A^T A)`` and ``M = (2/n) lambda_max(A^T A)`` where
    ``A`` stacks the flattened measurement matrices. These bound the
    restricted constants from the safe side (``m`` below, ``M`` above).
    """
    if isinstance(loss, QuadraticFull):
        return CurvaturePair(2.0, 2.0)
    if not isinstance(loss, LinearMeasurements):
        raise TypeError("curvature is only available for quadratic losses")
    evals = np.linalg.eigvalsh(loss.gram())
    lo, hi = float(evals[0]), float(evals[-1])
    scale = 2.0 / loss.n_samples
    if lo <= eig_floor:
        raise SingularDesign(f"lambda_min(A^T A) = {lo:.3g}", M=scale * hi)
    return CurvaturePair(scale * lo, scale * hi)


def gaussian_rsc_bound(n, N, k, r):
    """``1/32 - 162 (k + r) ln(N) / n``; nonpositive means the bound is vacuous."""
    if min(n, N, k + r) <= 0:
        raise ValueError("n, N and k + r must be positive")
    return 1.0 / 32.0 - 162.0 * (k + r) * math.log(N) / n
