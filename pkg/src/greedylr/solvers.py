"""Greedy (GreedySel) and GECO (OMPSel) rank-1 atom selection with a
fully-corrective refit after every addition, plus the partitioned
DistributedGreedy variant."""
import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .atoms import Atom, SupportSet, refit
from .errors import AllGainsNonpositive, Converged, EmptyPool, ZeroMatrix
from .linalg import sequential_orthogonalize, top_singular_pair
from .seeding import derive_seed

GECO_TAU = 1.0 - 1e-6
GREEDY_TAU = 1.0


@dataclass
class SolverConfig:
    k: int
    tau: float = None
    pool_size: int = 16
    seed: int = 0
    refit_tol: float = 1e-8
    refit_max_iter: int = 10_000
    power_max_iter: int = 100_000
    jobs: int = 1

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        if self.tau is not None and not (0 < self.tau <= 1):
            raise ValueError("tau must lie in (0, 1]")
        if self.pool_size < 1:
            raise ValueError("pool_size must be at least 1")

    def tau_or(self, default):
        return default if self.tau is None else self.tau


@dataclass
class IterationRecord:
    iteration: int
    atom: Atom
    gain: float
    f_after: float
    sigma_estimate: float = math.nan
    refit_converged: bool = True
    # the candidate as drawn, before orthogonalization against the support
    source_atom: Atom = None
    remaining_gap: float = None


@dataclass
class RunHistory:
    records: list = field(default_factory=list)
    oracle_opt: float = None
    converged_early: bool = False

    def append(self, rec):
        if self.oracle_opt is not None:
            rec.remaining_gap = self.oracle_opt - rec.f_after
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    @property
    def gains(self):
        return [r.gain for r in self.records]

    @property
    def values(self):
        """``[f(S_0), f(S_1), ...]`` with ``f(S_0) = 0``."""
        return [0.0] + [r.f_after for r in self.records]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "gain", "f_after", "sigma_estimate"])
        for r in self.records:
            w.writerow([r.iteration, repr(r.gain), repr(r.f_after), repr(r.sigma_estimate)])
        return buf.getvalue()


def _stop_threshold(f):
    return 1e-10 * (1.0 + abs(f))


def omp_select(obj, B, tau=GECO_TAU, seed=0, max_iter=100_000):
    """Top singular pair of the gradient at ``B``, certified to ``tau``.

    Power iteration runs with tolerance ``1 - tau`` (clipped to
    ``[1e-10, 0.5]``) so that ``<grad, u v^T> >= tau * sigma_1(grad)``.

    Raises :class:`Converged` when the gradient is numerically zero.
    """
    if not (0 < tau <= 1):
        raise ValueError("tau must lie in (0, 1]")
    tol = min(max(1.0 - tau, 1e-10), 0.5)
    try:
        _, u, v = top_singular_pair(obj.gradient(B), tol=tol, max_iter=max_iter, seed=seed)
    except ZeroMatrix as exc:
        raise Converged("gradient vanished") from exc
    return Atom(u, v)


def random_atoms(n, d, count, rng):
    """``count`` atoms with factors uniform on the unit spheres."""
    out = []
    for _ in range(count):
        out.append(Atom.from_vectors(rng.standard_normal(n), rng.standard_normal(d)))
    return out


def partition_pool(pool, l):
    """Round-robin split of an atom pool into ``l`` disjoint parts."""
    if l < 1:
        raise ValueError("need at least one partition")
    return [list(pool[j::l]) for j in range(l)]


@dataclass
class _Scored:
    index: int
    source: Atom
    atom: Atom
    solution: object
    gain: float


def _score_pool(obj, L, pool, f_L, warm_start, tol, max_iter, jobs=1):
    def score(item):
        i, a = item
        orth = sequential_orthogonalize([a], L)
        if not orth:
            return _Scored(i, a, None, None, -math.inf)
        sol = refit(L.extended(orth), obj, tol=tol, max_iter=max_iter, warm_start=warm_start)
        return _Scored(i, a, orth[0], sol, sol.f_value - f_L)

    items = list(enumerate(pool))
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(score, items))
    return [score(it) for it in items]


def _pick(scored, tau, f_L):
    if not scored:
        raise EmptyPool("candidate pool is empty")
    best = max(s.gain for s in scored)
    if best <= _stop_threshold(f_L):
        raise AllGainsNonpositive(f"best pool gain {best:.3g}")
    for s in scored:
        if s.gain >= tau * best:
            return s
    raise AssertionError("unreachable")


def greedy_select(obj, L, pool, tau=GREEDY_TAU, refit_tol=1e-8, refit_max_iter=10_000,
                  warm_start=None, jobs=1):
    """Return the first pool atom whose gain is within ``tau`` of the best.

    Each candidate is orthogonalized against ``L`` and scored by the refit
    gain ``f(L + {a}) - f(L)``. With ``tau = 1`` this is the argmax, ties
    going to the lowest pool index. The returned atom is the orthogonalized
    one.
    """
    if not pool:
        raise EmptyPool("candidate pool is empty")
    f_L = refit(L, obj, tol=refit_tol, max_iter=refit_max_iter, warm_start=warm_start).f_value
    scored = _score_pool(obj, L, pool, f_L, warm_start, refit_tol, refit_max_iter, jobs)
    return _pick(scored, tau, f_L).atom


def run_greedy(obj, cfg, pool=None, oracle_opt=None, callback=None):
    """Algorithm ``Greedy``: ``k`` rounds of GreedySel plus refit.

    With ``pool=None`` each round draws a fresh candidate pool made of the
    OMPSel atom and ``pool_size - 1`` seeded random atoms. A fixed ``pool``
    is scanned as given (used by the distributed variant).

    ``callback(i, support, solution)`` is invoked after every accepted atom.
    """
    tau = cfg.tau_or(GREEDY_TAU)
    support = SupportSet(obj.n, obj.d)
    sol = refit(support, obj)
    history = RunHistory(oracle_opt=oracle_opt)
    for i in range(1, cfg.k + 1):
        if pool is None:
            rng = np.random.default_rng(derive_seed(cfg.seed, "greedy-pool", i))
            candidates = []
            try:
                candidates.append(omp_select(obj, sol.B, GECO_TAU,
                                             seed=derive_seed(cfg.seed, "greedy-omp", i),
                                             max_iter=cfg.power_max_iter))
            except Converged:
                history.converged_early = True
                break
            candidates += random_atoms(obj.n, obj.d, cfg.pool_size - 1, rng)
        else:
            candidates = pool
        scored = _score_pool(obj, support, candidates, sol.f_value, sol.H,
                             cfg.refit_tol, cfg.refit_max_iter, cfg.jobs)
        try:
            chosen = _pick(scored, tau, sol.f_value)
        except (AllGainsNonpositive, EmptyPool):
            history.converged_early = True
            break
        sigma = float(np.sum(obj.gradient(sol.B) * chosen.source.matrix()))
        support = support.extended([chosen.atom])
        sol = chosen.solution
        history.append(IterationRecord(i, chosen.atom, chosen.gain, sol.f_value, sigma,
                                       sol.converged, chosen.source))
        if callback is not None:
            callback(i, support, sol)
    return support, sol, history


def run_geco(obj, cfg, oracle_opt=None, callback=None):
    """Algorithm ``GECO``: Greedy with OMPSel (top singular pair of the gradient)."""
    tau = cfg.tau_or(GECO_TAU)
    support = SupportSet(obj.n, obj.d)
    sol = refit(support, obj)
    history = RunHistory(oracle_opt=oracle_opt)
    for i in range(1, cfg.k + 1):
        try:
            atom = omp_select(obj, sol.B, tau, seed=derive_seed(cfg.seed, "geco-omp", i),
                              max_iter=cfg.power_max_iter)
        except Converged:
            history.converged_early = True
            break
        sigma = float(atom.u @ obj.gradient(sol.B) @ atom.v)
        orth = sequential_orthogonalize([atom], support)
        if not orth:
            history.converged_early = True
            break
        candidate = support.extended(orth)
        new_sol = refit(candidate, obj, tol=cfg.refit_tol, max_iter=cfg.refit_max_iter,
                        warm_start=sol.H)
        gain = new_sol.f_value - sol.f_value
        if gain <= _stop_threshold(sol.f_value):
            history.converged_early = True
            break
        support, sol = candidate, new_sol
        history.append(IterationRecord(i, orth[0], gain, sol.f_value, sigma,
                                       sol.converged, atom))
        if callback is not None:
            callback(i, support, sol)
    return support, sol, history


@dataclass
class DistributedReport:
    partition_values: list
    merged_value: float
    chosen: str  # "merged" or "partition:<j>"
    partition_histories: list = field(default_factory=list)
    merged_history: RunHistory = None


def run_distributed_greedy(obj, pools, cfg):
    """DistributedGreedy over ``l = len(pools)`` disjoint atom pools.

    Runs Greedy on every pool, then Greedy again on the union of the atoms
    each partition selected, and returns whichever of the merged solution and
    the best partition solution has the larger ``f``. Ties keep the partition
    solution.
    """
    if len(pools) < 1:
        raise ValueError("need at least one pool")
    seen = []
    for pool in pools:
        if not pool:
            raise EmptyPool("a partition pool is empty")
        for a in pool:
            for b in seen:
                if np.array_equal(a.u, b.u) and np.array_equal(a.v, b.v):
                    raise ValueError("pools must be disjoint")
            seen.append(a)

    def solve(j):
        sub = SolverConfig(**{**cfg.__dict__, "seed": derive_seed(cfg.seed, "partition", j),
                              "jobs": 1})
        return run_greedy(obj, sub, pool=pools[j])

    if cfg.jobs > 1 and len(pools) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(solve, range(len(pools))))
    else:
        results = [solve(j) for j in range(len(pools))]

    values = [res[1].f_value for res in results]
    best_j = int(np.argmax(values))
    merged_pool = [rec.source_atom for res in results for rec in res[2].records]
    if merged_pool:
        merged = run_greedy(obj, SolverConfig(**{**cfg.__dict__, "jobs": 1}), pool=merged_pool)
    else:
        merged = results[best_j]
    report = DistributedReport(values, merged[1].f_value, f"partition:{best_j}",
                               [res[2] for res in results], merged[2])
    if merged[1].f_value > values[best_j]:
        report.chosen = "merged"
        return merged[0], merged[1], report
    return results[best_j][0], results[best_j][1], report
