"""Stochastic block model clustering with logistic PCA versus spectral
baselines, and low-rank recovery from Gaussian linear measurements."""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from .analysis import approx_bound, check_recovery_bound
from .errors import DimensionMismatch, SingularDesign
from .objective import LinearMeasurements, LogisticPCA, gaussian_rsc_bound, quadratic_curvature
from .seeding import derive_seed
from .solvers import GECO_TAU, SolverConfig, run_geco

log = logging.getLogger(__name__)

CLUSTERING_HEADER = ["method", "k", "p", "run", "reconstruction", "generalization"]
RECOVERY_HEADER = ["seed", "m1", "m2", "r", "n", "sigma", "k", "error", "rhs", "m", "C",
                   "holds", "vacuous"]


# -- stochastic block model ------------------------------------------------

@dataclass
class SBMConfig:
    n: int
    k_true: int
    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError("p must lie in (0, 1]")
        if not 1 <= self.k_true <= self.n:
            raise ValueError("need 1 <= k_true <= n")

    def labels(self):
        # contiguous, as-equal-as-possible clusters
        return (np.arange(self.n) * self.k_true) // self.n


def sbm_generate(cfg):
    """Sample a symmetric 0/1 adjacency with zero diagonal.

    Pairs in the same cluster get an edge with probability ``p``, others with
    ``1 - p``. Returns ``(A, P_true, labels)``; the diagonal of ``P_true`` is
    ``p`` by convention.
    """
    labels = cfg.labels()
    same = labels[:, None] == labels[None, :]
    P = np.where(same, cfg.p, 1.0 - cfg.p)
    rng = np.random.default_rng(cfg.seed)
    draws = rng.random((cfg.n, cfg.n))
    upper = np.triu(draws < P, k=1)
    A = (upper | upper.T).astype(float)
    return A, P, labels


# -- k-means ---------------------------------------------------------------

def _kmeans_pp(X, k, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def _sq_dists(X, C):
    return np.sum(X * X, 1)[:, None] - 2 * X @ C.T + np.sum(C * C, 1)[None, :]


def _lloyd(X, centers, max_iter=500, rtol=1e-8):
    k = centers.shape[0]
    prev = math.inf
    for _ in range(max_iter):
        D = np.maximum(_sq_dists(X, centers), 0.0)
        labels = np.argmin(D, axis=1)
        inertia = float(D[np.arange(X.shape[0]), labels].sum())
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = X[members].mean(axis=0)
            else:
                # reseed an empty cluster at the worst-fit point
                far = int(np.argmax(D[np.arange(X.shape[0]), labels]))
                centers[j] = X[far]
        if prev - inertia <= rtol * max(prev, 1e-300) or inertia == 0.0:
            break
        prev = inertia
    D = np.maximum(_sq_dists(X, centers), 0.0)
    labels = np.argmin(D, axis=1)
    return labels, float(D[np.arange(X.shape[0]), labels].sum())


def kmeans(points, k, seed=0, restarts=10, return_inertia=False):
    """k-means++ seeding plus Lloyd iterations; best of ``restarts`` runs."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not 1 <= k <= X.shape[0]:
        raise ValueError("need 1 <= k <= number of points")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, inertia = _lloyd(X, _kmeans_pp(X, k, rng))
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return best if return_inertia else best[0]


# -- spectral clustering -----------------------------------------------------

def laplacian(A, normalized=False):
    A = np.asarray(A, dtype=float)
    deg = A.sum(axis=1)
    L = np.diag(deg) - A
    if not normalized:
        return L
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    # isolated nodes give zero rows and columns
    return inv_sqrt[:, None] * L * inv_sqrt[None, :]


def bottom_eigenvectors(L, k, seed=0, tol=1e-8, max_iter=20_000):
    """Bottom-``k`` eigenvectors of a Laplacian without shift-invert.

    Orthogonal (block power) iteration on ``cI - L`` with Rayleigh-Ritz,
    ``c = 2 * max_degree + 1`` (a Gershgorin bound). Iteration stops when
    the Ritz residual drops below ``tol`` or after ``max_iter`` sweeps.
    Returns ``(eigenvalues, vectors)`` in ascending order.
    """
    n = L.shape[0]
    c = 2.0 * float(np.max(np.abs(np.diag(L)))) + 1.0
    Mshift = c * np.eye(n) - L
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    for it in range(max_iter):
        Q, _ = np.linalg.qr(Mshift @ Q)
        if it % 10 == 9 or it == max_iter - 1:
            T = Q.T @ L @ Q
            w, S = np.linalg.eigh((T + T.T) / 2)
            Q = Q @ S
            res = np.linalg.norm(L @ Q - Q * w[None, :], axis=0)
            if np.max(res) <= tol * c:
                break
    T = Q.T @ L @ Q
    w, S = np.linalg.eigh((T + T.T) / 2)
    return w, Q @ S


def spectral_clustering(A, k, normalized=False, seed=0, restarts=10):
    """Cluster the rows of the bottom-``k`` Laplacian eigenvectors with k-means."""
    _, vecs = bottom_eigenvectors(laplacian(A, normalized), k,
                                  seed=derive_seed(seed, "eig"))
    return kmeans(vecs, k, seed=derive_seed(seed, "kmeans"), restarts=restarts)


# -- errors ----------------------------------------------------------------

def block_mean_estimate(A, labels):
    """Block-constant matrix of within-assigned-cluster mean adjacency.

    Diagonal entries are excluded from the means (the adjacency has none);
    singleton blocks fall back to 0.
    """
    A = np.asarray(A, dtype=float)
    labels = np.asarray(labels)
    ids = np.unique(labels)
    onehot = (labels[:, None] == ids[None, :]).astype(float)
    sums = onehot.T @ A @ onehot - onehot.T @ np.diag(np.diag(A)) @ onehot
    sizes = onehot.sum(axis=0)
    pairs = np.outer(sizes, sizes) - np.diag(sizes)
    means = np.divide(sums, pairs, out=np.zeros_like(sums), where=pairs > 0)
    return onehot @ means @ onehot.T


def eigen_estimate(A, vecs):
    """``Q Q^T A Q Q^T`` for orthonormal columns ``Q``, clipped to ``[0, 1]``."""
    A = np.asarray(A, dtype=float)
    P = vecs @ vecs.T
    return np.clip(P @ A @ P, 0.0, 1.0)


def model_errors(theta_hat, p_true, a, scale="natural", exclude_diagonal=True):
    """Mean squared error of the fitted probabilities against ``P_true``
    (generalization) and against the observed ``A`` (reconstruction).

    ``theta_hat`` holds natural parameters (``scale="natural"``, mapped
    through the logistic function) or probabilities (``scale="probability"``).
    For square inputs the diagonal is left out by default, since a graph has
    no self loops to reconstruct.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    p_true = np.asarray(p_true, dtype=float)
    a = np.asarray(a, dtype=float)
    if not theta_hat.shape == p_true.shape == a.shape:
        raise DimensionMismatch("theta_hat, P_true and A must have the same shape")
    prob = expit(theta_hat) if scale == "natural" else theta_hat
    mask = np.ones(prob.shape, dtype=bool)
    if exclude_diagonal and prob.shape[0] == prob.shape[1]:
        np.fill_diagonal(mask, False)
    count = mask.sum()
    gen = float(np.sum(((prob - p_true) ** 2)[mask]) / count)
    rec = float(np.sum(((prob - a) ** 2)[mask]) / count)
    return gen, rec


# -- clustering experiment ---------------------------------------------------

@dataclass
class ClusteringRow:
    method: str
    k: int
    p: float
    run: int
    reconstruction: float
    generalization: float

    def as_csv_row(self):
        return [self.method, self.k, repr(self.p), self.run,
                repr(self.reconstruction), repr(self.generalization)]


@dataclass
class ClusteringGrid:
    n: int = 60
    k_true: int = 3
    p_values: tuple = (0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)
    ks: tuple = (3, 5, 10)
    runs: int = 10
    seed: int = 0
    methods: tuple = ("Greedy", "Spectral_norm", "Spectral_unnorm")
    # "blocks": block means over the k-means labels; "eigen": A projected
    # onto the bottom Laplacian eigenvectors
    spectral_estimate: str = "blocks"

    def __post_init__(self):
        if self.spectral_estimate not in ("blocks", "eigen"):
            raise ValueError("spectral_estimate must be 'blocks' or 'eigen'")


def p_grid(start, stop, step):
    """Inclusive grid ``start, start + step, ..., stop`` rounded to 10 digits."""
    if step <= 0 or start > stop:
        raise ValueError("p grid needs step > 0 and start <= stop")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


def _clustering_cell(args):
    grid, p_index, run = args
    p = grid.p_values[p_index]
    cell_seed = derive_seed(grid.seed, "sbm", p_index, run)
    A, P, _ = sbm_generate(SBMConfig(grid.n, grid.k_true, p, cell_seed))
    rows, failures = [], []
    for method in grid.methods:
        try:
            if method == "Greedy":
                snapshots = {}
                kmax = max(grid.ks)

                def keep(i, support, sol):
                    if i in grid.ks:
                        snapshots[i] = sol.B

                _, sol, _ = run_geco(LogisticPCA(A),
                                     SolverConfig(k=kmax, seed=derive_seed(cell_seed, "geco")),
                                     callback=keep)
                for k in grid.ks:
                    gen, rec = model_errors(snapshots.get(k, sol.B), P, A)
                    rows.append(ClusteringRow(method, k, p, run, rec, gen))
            else:
                normalized = method == "Spectral_norm"
                for k in grid.ks:
                    seed = derive_seed(cell_seed, method, k)
                    if grid.spectral_estimate == "eigen":
                        _, vecs = bottom_eigenvectors(laplacian(A, normalized), k,
                                                      seed=derive_seed(seed, "eig"))
                        est = eigen_estimate(A, vecs)
                    else:
                        est = block_mean_estimate(A, spectral_clustering(A, k, normalized, seed))
                    gen, rec = model_errors(est, P, A, scale="probability")
                    rows.append(ClusteringRow(method, k, p, run, rec, gen))
        except Exception as exc:  # recorded, not fatal
            failures.append((method, p, run, repr(exc)))
            for k in grid.ks:
                rows.append(ClusteringRow(method, k, p, run, math.nan, math.nan))
    return rows, failures


def run_clustering_experiment(grid, jobs=1):
    """Every ``(p, method, k, run)`` cell of the grid; returns ``(rows, failures)``.

    Rows are sorted by ``(p, method, k, run)`` so the output does not depend
    on ``jobs``.
    """
    tasks = [(grid, i, run) for i in range(len(grid.p_values)) for run in range(grid.runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_clustering_cell, tasks))
    else:
        results = [_clustering_cell(t) for t in tasks]
    rows = [row for res in results for row in res[0]]
    failures = [f for res in results for f in res[1]]
    for f in failures:
        log.warning("cell failed: %s", f)
    rows.sort(key=lambda r: (r.p, r.method, r.k, r.run))
    return rows, failures


# -- recovery experiment -----------------------------------------------------

@dataclass
class RecoveryReport:
    seed: int
    m1: int
    m2: int
    r: int
    n: int
    sigma: float
    k: int
    error: float
    rhs: float
    m: float
    C: float
    holds: bool
    vacuous: bool
    B: np.ndarray = field(default=None, repr=False)
    theta_star: np.ndarray = field(default=None, repr=False)

    def as_csv_row(self):
        d = asdict(self)
        return [repr(d[h]) if isinstance(d[h], float) else d[h] for h in RECOVERY_HEADER]


def low_rank_truth(m1, m2, r, rng):
    """Sum of ``r`` random unit rank-1 terms, scaled to unit Frobenius norm."""
    theta = np.zeros((m1, m2))
    for _ in range(r):
        u = rng.standard_normal(m1)
        v = rng.standard_normal(m2)
        theta += np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v))
    norm = np.linalg.norm(theta)
    return theta / norm if norm > 0 else theta


def run_recovery_experiment(m1, m2, r, n, sigma, k, seed=0, tau=GECO_TAU):
    """Recover a rank-``r`` matrix from ``n`` Gaussian measurements with GECO.

    ``y_i = <X_i, Theta*> + eps``, ``X_i`` entries ``N(0, 1)``,
    ``eps ~ N(0, sigma^2)``. Reports the squared recovery error and the
    recovery bound evaluated at ``B_r = Theta*`` with
    ``m = max(m_quadratic, gaussian_rsc_bound)`` and ``C`` from the GECO
    approximation bound.
    """
    if min(m1, m2, n) <= 0 or r < 0 or k < 0 or sigma < 0:
        raise ValueError("invalid recovery parameters")
    rng = np.random.default_rng(seed)
    theta = low_rank_truth(m1, m2, r, rng)
    X = rng.standard_normal((n, m1, m2))
    y = np.einsum("sij,ij->s", X, theta) + sigma * rng.standard_normal(n)
    obj = LinearMeasurements(X, y)
    _, sol, _ = run_geco(obj, SolverConfig(k=k, tau=tau, seed=derive_seed(seed, "geco")))
    diff = sol.B - theta
    error = float(np.sum(diff * diff))

    rsc = gaussian_rsc_bound(n, m1 * m2, max(k, 1), max(r, 1))
    try:
        curv = quadratic_curvature(obj)
        m, M = max(curv.m, rsc), curv.M
    except SingularDesign as exc:
        m, M = rsc, exc.M
    if r == 0 or m <= 0:
        # nothing to bound against, or no usable curvature
        return RecoveryReport(seed, m1, m2, r, n, sigma, k, error, math.nan, m, math.nan,
                              True, True, sol.B, theta)
    C = approx_bound(tau, min(m / M, 1.0), k, r, squared_tau=True)
    rep = check_recovery_bound(obj, sol.B, theta, m, C, k, r)
    return RecoveryReport(seed, m1, m2, r, n, sigma, k, error, rep.rhs, m, C, rep.holds,
                          False, sol.B, theta)
