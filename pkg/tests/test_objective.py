import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greedylr.errors import DimensionMismatch, SingularDesign
from greedylr.objective import (BinomialCounts, LinearMeasurements, LogisticPCA, QuadraticFull,
                                check_gradient, gaussian_rsc_bound, quadratic_curvature)


def losses(seed):
    rng = np.random.default_rng(seed)
    n, d = 5, 4
    X = rng.standard_normal((12, n, d))
    return [
        QuadraticFull(rng.standard_normal((n, d))),
        LinearMeasurements(X, rng.standard_normal(12)),
        LogisticPCA((rng.random((n, d)) < 0.4).astype(float)),
        BinomialCounts(rng.random((n, d))),
    ]


@pytest.mark.parametrize("idx", range(4))
def test_gradient_matches_finite_differences(idx):
    rng = np.random.default_rng(idx)
    obj = losses(idx)[idx]
    for _ in range(5):
        assert check_gradient(obj, rng.standard_normal(obj.shape)) <= 1e-5


@pytest.mark.parametrize("idx", range(4))
def test_midpoint_concavity(idx):
    rng = np.random.default_rng(100 + idx)
    obj = losses(idx)[idx]
    for _ in range(10):
        a, b = 3 * rng.standard_normal(obj.shape), 3 * rng.standard_normal(obj.shape)
        assert obj.value((a + b) / 2) >= (obj.value(a) + obj.value(b)) / 2 - 1e-9


def test_quadratic_values():
    Y = np.array([[1.0, 2.0], [3.0, 4.0]])
    obj = QuadraticFull(Y)
    assert obj.value(Y) == 0.0
    assert obj.zero_value == -30.0
    assert np.allclose(obj.gradient(np.zeros((2, 2))), 2 * Y)


def test_logistic_value_at_zero():
    obj = LogisticPCA(np.array([[0.0, 1.0], [1.0, 1.0]]))
    assert obj.zero_value == pytest.approx(-4 * np.log(2))


def test_logistic_rejects_non_binary():
    with pytest.raises(ValueError):
        LogisticPCA(np.array([[0.5, 1.0]]))


def test_binomial_rejects_out_of_range():
    with pytest.raises(ValueError):
        BinomialCounts(np.array([[1.5]]))


def test_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        QuadraticFull(np.ones((2, 3))).value(np.ones((3, 2)))


def test_linear_from_design_round_trip():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((10, 6))
    obj = LinearMeasurements.from_design(A, rng.standard_normal(10), (2, 3))
    theta = rng.standard_normal((2, 3))
    assert np.allclose(obj.measure(theta), A @ theta.ravel())


def test_full_quadratic_curvature():
    curv = quadratic_curvature(QuadraticFull(np.ones((3, 4))))
    assert (curv.m, curv.M) == pytest.approx((2.0, 2.0))
    assert curv.ratio == pytest.approx(1.0)


def test_linear_curvature_matches_svd_oracle():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((40, 6))
    obj = LinearMeasurements.from_design(A, rng.standard_normal(40), (2, 3))
    s = np.linalg.svd(A, compute_uv=False)
    curv = quadratic_curvature(obj)
    assert curv.M == pytest.approx(2 * s[0] ** 2 / 40)
    assert curv.m == pytest.approx(2 * s[-1] ** 2 / 40)


def test_underdetermined_design_is_singular():
    rng = np.random.default_rng(4)
    obj = LinearMeasurements(rng.standard_normal((3, 2, 3)), rng.standard_normal(3))
    with pytest.raises(SingularDesign) as info:
        quadratic_curvature(obj)
    assert info.value.M > 0


def test_rsc_bound_arithmetic():
    assert gaussian_rsc_bound(1000, 64, 4, 2) == pytest.approx(1 / 32 - 162 * 6 * np.log(64) / 1000)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(-3, 3), st.floats(-3, 3))
def test_logistic_concave_along_lines(seed, s, t):
    rng = np.random.default_rng(seed)
    obj = LogisticPCA((rng.random((3, 3)) < 0.5).astype(float))
    a, b = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    lam = 0.3
    x, y = a + s * b, a + t * b
    assert obj.value(lam * x + (1 - lam) * y) >= lam * obj.value(x) + (1 - lam) * obj.value(y) - 1e-9
