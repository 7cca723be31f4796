import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from greedylr.atoms import Atom, SupportSet, refit, set_value
from greedylr.errors import DimensionMismatch
from greedylr.objective import BinomialCounts, LinearMeasurements, LogisticPCA, QuadraticFull


def svd_support(Y, r):
    U, _, Vt = np.linalg.svd(Y)
    return SupportSet(*Y.shape, tuple(Atom(U[:, i], Vt[i]) for i in range(r)))


def test_atom_requires_unit_norm():
    with pytest.raises(ValueError):
        Atom(np.array([1.0, 1.0]), np.array([1.0]))


def test_empty_support():
    S = SupportSet(3, 2)
    assert S.U.shape == (0, 3) and S.V.shape == (0, 2)
    sol = refit(S, QuadraticFull(np.ones((3, 2))))
    assert sol.f_value == 0.0 and not sol.B.any()


def test_support_text_round_trip():
    rng = np.random.default_rng(0)
    S = SupportSet(4, 3, tuple(Atom.from_vectors(rng.standard_normal(4), rng.standard_normal(3))
                               for _ in range(2)))
    back = SupportSet.from_text(S.to_text())
    assert np.array_equal(back.U, S.U) and np.array_equal(back.V, S.V)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        SupportSet(3, 3, (Atom(np.ones(2) / np.sqrt(2), np.ones(3) / np.sqrt(3)),))


@pytest.mark.parametrize("r", [1, 2, 4])
def test_eckart_young(r):
    Y = np.random.default_rng(r).standard_normal((6, 5))
    s = np.linalg.svd(Y, compute_uv=False)
    assert set_value(svd_support(Y, r), QuadraticFull(Y)) == pytest.approx(np.sum(s[:r] ** 2))


def test_logistic_rank_one_matches_line_search_oracle():
    rng = np.random.default_rng(7)
    obj = LogisticPCA((rng.random((6, 5)) < 0.3).astype(float))
    atom = Atom.from_vectors(rng.standard_normal(6), rng.standard_normal(5))
    res = minimize_scalar(lambda h: -obj.value(h * atom.matrix()), bracket=(-5, 0, 5),
                          method="golden", tol=1e-12)
    grid = np.linspace(-20, 20, 4001)
    grid_best = max(obj.value(h * atom.matrix()) for h in grid)
    f = set_value(SupportSet(6, 5, (atom,)), obj, tol=1e-12)
    assert f == pytest.approx(-res.fun - obj.zero_value, abs=1e-9)
    assert f + obj.zero_value >= grid_best - 1e-9


def test_gradient_ascent_matches_closed_form_on_quadratic():
    # run the iterative path by hiding the closed form
    class Plain(QuadraticFull):
        def closed_form_coefficients(self, U, V):
            return None

    Y = np.random.default_rng(3).standard_normal((5, 4))
    S = svd_support(Y, 2)
    rng = np.random.default_rng(4)
    S = S.extended([Atom.from_vectors(rng.standard_normal(5), rng.standard_normal(4))])
    exact = refit(S, QuadraticFull(Y))
    it = refit(S, Plain(Y), tol=1e-12)
    assert it.converged
    assert it.f_value == pytest.approx(exact.f_value, rel=1e-10)


def test_linear_closed_form_is_stationary():
    rng = np.random.default_rng(5)
    obj = LinearMeasurements(rng.standard_normal((30, 3, 3)), rng.standard_normal(30))
    S = SupportSet(3, 3, tuple(Atom.from_vectors(rng.standard_normal(3), rng.standard_normal(3))
                               for _ in range(2)))
    sol = refit(S, obj)
    gH = S.U @ obj.gradient(sol.B) @ S.V.T
    assert np.abs(gH).max() <= 1e-9


def test_max_iter_flags_nonconvergence():
    rng = np.random.default_rng(6)
    obj = BinomialCounts(rng.random((5, 5)))
    S = SupportSet(5, 5, (Atom.from_vectors(rng.standard_normal(5), rng.standard_normal(5)),))
    sol = refit(S, obj, tol=1e-14, max_iter=1)
    assert not sol.converged and sol.inner_iters == 1


def test_warm_start_same_answer():
    rng = np.random.default_rng(8)
    obj = BinomialCounts(rng.uniform(0.2, 0.8, (5, 5)))
    atoms = tuple(Atom.from_vectors(rng.standard_normal(5), rng.standard_normal(5)) for _ in range(3))
    S2 = SupportSet(5, 5, atoms[:2])
    S3 = S2.extended(atoms[2:])
    cold = refit(S3, obj, tol=1e-10)
    warm = refit(S3, obj, tol=1e-10, warm_start=refit(S2, obj, tol=1e-10).H)
    assert warm.f_value == pytest.approx(cold.f_value, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 3))
def test_f_is_monotone_and_nonnegative(seed, k):
    rng = np.random.default_rng(seed)
    obj = BinomialCounts(rng.uniform(0.1, 0.9, (4, 4)))
    atoms = [Atom.from_vectors(rng.standard_normal(4), rng.standard_normal(4)) for _ in range(k + 1)]
    small = set_value(SupportSet(4, 4, tuple(atoms[:k])), obj, tol=1e-10)
    big = set_value(SupportSet(4, 4, tuple(atoms)), obj, tol=1e-10)
    assert small >= -1e-12
    assert big >= small - 1e-8
