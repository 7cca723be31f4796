import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greedylr.atoms import Atom, SupportSet, set_value
from greedylr.errors import EmptyPool
from greedylr.linalg import sequential_orthogonalize
from greedylr.objective import BinomialCounts, LogisticPCA, QuadraticFull
from greedylr.solvers import (SolverConfig, greedy_select, omp_select, partition_pool,
                              random_atoms, run_distributed_greedy, run_geco, run_greedy)


def noisy_lowrank(seed, n=12, d=9, rank=3):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, rank)) @ rng.standard_normal((rank, d)) + 0.05 * rng.standard_normal((n, d))


@pytest.mark.parametrize("seed", range(5))
def test_geco_matches_truncated_svd(seed):
    Y = noisy_lowrank(seed)
    s = np.linalg.svd(Y, compute_uv=False)
    _, sol, hist = run_geco(QuadraticFull(Y), SolverConfig(k=4, seed=seed))
    assert hist.values == pytest.approx([0.0] + list(np.cumsum(s[:4] ** 2)), rel=1e-6)
    assert sol.f_value == pytest.approx(np.sum(s[:4] ** 2), rel=1e-6)


def test_rank_one_target_in_one_step():
    Y = np.outer([1.0, 2.0, 2.0], [3.0, 0.0, 4.0])
    support, sol, hist = run_geco(QuadraticFull(Y), SolverConfig(k=3))
    assert len(support) == 1 and hist.converged_early
    assert np.allclose(sol.B, Y)


def test_k_zero():
    support, sol, hist = run_geco(QuadraticFull(np.ones((3, 3))), SolverConfig(k=0))
    assert len(support) == 0 and sol.f_value == 0.0 and hist.values == [0.0]


def test_zero_target_stops_immediately():
    for run in (run_geco, run_greedy):
        support, sol, hist = run(QuadraticFull(np.zeros((4, 3))), SolverConfig(k=2))
        assert len(support) == 0 and hist.converged_early


def test_greedy_select_is_exhaustive_argmax():
    rng = np.random.default_rng(1)
    obj = BinomialCounts(rng.uniform(0.1, 0.9, (5, 4)))
    L = SupportSet(5, 4, (Atom.from_vectors(rng.standard_normal(5), rng.standard_normal(4)),))
    pool = random_atoms(5, 4, 8, rng)
    chosen = greedy_select(obj, L, pool, tau=1.0, refit_tol=1e-10)
    gains = []
    for a in pool:
        orth = sequential_orthogonalize([a], L)
        gains.append(set_value(L.extended(orth), obj, tol=1e-10))
    best = pool[int(np.argmax(gains))]
    assert np.allclose(chosen.matrix(), sequential_orthogonalize([best], L)[0].matrix())


def test_greedy_select_empty_pool():
    with pytest.raises(EmptyPool):
        greedy_select(QuadraticFull(np.ones((2, 2))), SupportSet(2, 2), [])


def test_omp_select_is_top_pair_of_gradient():
    Y = np.diag([1.0, 4.0, 2.0])
    atom = omp_select(QuadraticFull(Y), np.zeros((3, 3)), tau=1 - 1e-9)
    assert abs(atom.u[1]) == pytest.approx(1.0) and abs(atom.v[1]) == pytest.approx(1.0)


def test_history_invariants_logistic():
    rng = np.random.default_rng(2)
    obj = LogisticPCA((rng.random((10, 8)) < 0.3).astype(float))
    support, sol, hist = run_geco(obj, SolverConfig(k=4, seed=3))
    vals = hist.values
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert [r.iteration for r in hist.records] == list(range(1, len(hist) + 1))
    assert np.allclose(support.U @ support.U.T, np.eye(len(support)), atol=1e-10)
    assert sol.f_value == vals[-1]
    assert hist.to_csv().splitlines()[0] == "iteration,gain,f_after,sigma_estimate"


def test_greedy_pool_contains_omp_atom():
    # greedy with the OMP atom in its pool does at least as well per step on the full quadratic
    Y = noisy_lowrank(4)
    _, sol_g, _ = run_greedy(QuadraticFull(Y), SolverConfig(k=3, seed=1, pool_size=4))
    s = np.linalg.svd(Y, compute_uv=False)
    assert sol_g.f_value == pytest.approx(np.sum(s[:3] ** 2), rel=1e-6)


def test_runs_are_deterministic():
    rng = np.random.default_rng(5)
    obj = LogisticPCA((rng.random((8, 8)) < 0.5).astype(float))
    a = run_greedy(obj, SolverConfig(k=3, seed=9, pool_size=5))
    b = run_greedy(obj, SolverConfig(k=3, seed=9, pool_size=5, jobs=3))
    assert np.array_equal(a[1].B, b[1].B)


def test_callback_sees_every_step():
    seen = []
    run_geco(QuadraticFull(noisy_lowrank(0)), SolverConfig(k=3),
             callback=lambda i, S, sol: seen.append((i, len(S))))
    assert seen == [(1, 1), (2, 2), (3, 3)]


def test_partition_round_robin():
    parts = partition_pool(list(range(7)), 3)
    assert parts == [[0, 3, 6], [1, 4], [2, 5]]


def test_distributed_single_partition_is_greedy():
    rng = np.random.default_rng(6)
    obj = QuadraticFull(noisy_lowrank(6))
    pool = random_atoms(obj.n, obj.d, 10, rng)
    cfg = SolverConfig(k=3)
    _, s1, _ = run_greedy(obj, cfg, pool=pool)
    _, s2, rep = run_distributed_greedy(obj, [pool], cfg)
    assert np.array_equal(s1.B, s2.B) and s1.f_value == s2.f_value


def test_distributed_rejects_overlapping_pools():
    rng = np.random.default_rng(7)
    pool = random_atoms(3, 3, 2, rng)
    with pytest.raises(ValueError):
        run_distributed_greedy(QuadraticFull(np.ones((3, 3))), [pool, pool[:1]], SolverConfig(k=1))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4))
def test_distributed_at_least_best_partition(seed, parts):
    rng = np.random.default_rng(seed)
    obj = QuadraticFull(rng.standard_normal((5, 4)))
    pool = random_atoms(5, 4, 8, rng)
    _, sol, rep = run_distributed_greedy(obj, partition_pool(pool, parts), SolverConfig(k=2))
    assert sol.f_value >= max(rep.partition_values)
    assert len(rep.partition_values) == parts


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(k=-1)
    with pytest.raises(ValueError):
        SolverConfig(k=1, tau=0.0)
