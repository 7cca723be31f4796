"""Dense primitives: top singular pair, row/column projection, and
sequential Gram-Schmidt of atoms against a support."""
import numpy as np

from .atoms import Atom
from .errors import DimensionMismatch, NonConverged, ZeroMatrix

ZERO_FRO = 1e-14


def top_singular_pair(G, tol=1e-10, max_iter=10_000, seed=0):
    """Leading singular triple of ``G`` by alternating power iteration.

    Starting from a seeded vector uniform on the unit sphere, iterate
    ``u <- Gv/|Gv|``, ``v <- G^T u/|G^T u|``. Stops once the relative change
    of the sigma estimate over one sweep is below ``tol`` and the residual
    ``|Gv - sigma u|`` is at most ``tol * sigma``.

    Returns
    -------
    sigma, u, v
        With ``u^T G v == sigma`` (up to rounding).

    Raises
    ------
    ZeroMatrix
        If ``|G|_F < 1e-14``.
    NonConverged
        If ``max_iter`` sweeps do not satisfy the stopping test.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2:
        raise DimensionMismatch("expected a 2-D matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.all(np.isfinite(G)):
        raise ValueError("matrix has non-finite entries")
    if np.linalg.norm(G) < ZERO_FRO:
        raise ZeroMatrix("matrix is numerically zero")

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(G.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        Gv = G @ v
        nu = np.linalg.norm(Gv)
        if nu == 0.0:
            # start vector in the null space; restart from a fresh draw
            v = rng.standard_normal(G.shape[1])
            v /= np.linalg.norm(v)
            continue
        u = Gv / nu
        Gtu = G.T @ u
        sigma_new = np.linalg.norm(Gtu)
        v = Gtu / sigma_new
        residual = np.linalg.norm(G @ v - sigma_new * u)
        rel_change = abs(sigma_new - sigma) / sigma_new
        sigma = sigma_new
        if rel_change < tol and residual <= tol * sigma:
            return float(sigma), u, v
    raise NonConverged(f"power iteration did not converge in {max_iter} sweeps")


def project_rowcol(G, U, V):
    """Project ``G`` onto ``span(U^T) x span(V^T)``: ``U^T U G V^T V``.

    ``U`` (``k x n``) and ``V`` (``k' x d``) must have orthonormal rows.
    """
    G = np.asarray(G, dtype=float)
    U = np.atleast_2d(np.asarray(U, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if U.shape[1] != G.shape[0] or V.shape[1] != G.shape[1]:
        raise DimensionMismatch(
            f"cannot project {G.shape} matrix with U {U.shape}, V {V.shape}")
    return U.T @ (U @ G @ V.T) @ V


def _residual(x, basis):
    # two passes of classical Gram-Schmidt for stability
    for _ in range(2):
        for b in basis:
            x = x - (b @ x) * b
    return x


def sequential_orthogonalize(S, L=(), drop_tol=1e-8):
    """Gram-Schmidt the atoms of ``S`` against ``L`` and each other.

    u-components and v-components are handled independently. An atom whose
    residual u- or v-norm falls below ``drop_tol`` is dropped.
    """
    u_basis = [a.u for a in L]
    v_basis = [a.v for a in L]
    out = []
    for a in S:
        ru = _residual(a.u, u_basis)
        rv = _residual(a.v, v_basis)
        nu, nv = np.linalg.norm(ru), np.linalg.norm(rv)
        if nu < drop_tol or nv < drop_tol:
            continue
        atom = Atom(ru / nu, rv / nv)
        out.append(atom)
        u_basis.append(atom.u)
        v_basis.append(atom.v)
    return out
