import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import special

from kornlab import matalg
from kornlab.matalg import Tensor3, c_d, frob, project, pstar


def test_pstar_duality():
    assert pstar(4) == 4
    assert pstar(4 / 3) == pytest.approx(4)
    assert pstar(2) == 2


def test_project_identity_is_symmetric():
    assert np.allclose(project(np.eye(3), "skew"), 0)


def test_project_elementary():
    E12 = np.zeros((3, 3))
    E12[0, 1] = 1
    S = project(E12, "sym")
    assert S[0, 1] == S[1, 0] == 0.5
    assert np.count_nonzero(S) == 2


def test_project_rejects_1x1():
    with pytest.raises(ValueError):
        project(np.ones((1, 1)), "sym")


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6).flatmap(lambda d: arrays(float, (d, d), elements=st.floats(-10, 10))))
def test_projections_pythagoras_and_decomposition(A):
    S, K = project(A, "sym"), project(A, "skew")
    S0, I = project(A, "sym0"), project(A, "spanid")
    scale = 1 + np.sum(A * A)
    assert abs(np.sum(S * S) + np.sum(K * K) - np.sum(A * A)) <= 1e-12 * scale
    assert np.allclose(S + K, A, atol=1e-12 * scale)
    assert np.allclose(S0 + I, S, atol=1e-12 * scale)
    assert abs(np.sum(S * K)) <= 1e-12 * scale
    # idempotent
    assert np.allclose(project(S0, "sym0"), S0, atol=1e-12 * scale)


def test_frobenius_zero_iff_zero():
    assert frob(np.zeros((2, 2))) == 0
    assert frob(np.eye(2)) == pytest.approx(np.sqrt(2))


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_skew_defect_operator(d):
    T, lmin, const = matalg.skew_defect_operator(d)
    assert T.shape == (d * d * (d + 1) // 2,) * 2
    assert lmin == pytest.approx(-0.5, abs=1e-10)
    assert const == pytest.approx(3.0, abs=1e-10)
    I = np.eye(len(T))
    assert np.abs(T @ T - 0.5 * I - 0.5 * T).max() <= 1e-12
    ev = np.linalg.eigvalsh(T)
    assert np.all(np.minimum(np.abs(ev - 1), np.abs(ev + 0.5)) <= 1e-10)
    assert np.abs((T - I) @ (2 * T + I)).max() <= 1e-12


def test_skew_defect_rejects_small_d():
    with pytest.raises(ValueError):
        matalg.skew_defect_operator(1)


def test_skew_ratio_examples():
    rng = np.random.default_rng(1)
    S = rng.standard_normal((3, 3))
    S = S + S.T
    a = np.zeros((3, 3, 3))
    a[0] = S
    assert 0 <= matalg.skew_defect_ratio(a) <= 3
    v = rng.standard_normal(3)
    full = np.einsum("i,j,k->ijk", v, v, v)
    assert matalg.skew_defect_ratio(full) == pytest.approx(0, abs=1e-14)
    for d in (2, 3, 5):
        assert matalg.skew_defect_ratio(matalg.skew_defect_extremal(d)) == pytest.approx(3, abs=1e-8)


def test_skew_ratio_errors():
    with pytest.raises(ValueError):
        matalg.skew_defect_ratio(np.zeros((2, 2, 2)))
    bad = np.arange(8.0).reshape(2, 2, 2)
    with pytest.raises(ValueError):
        matalg.skew_defect_ratio(Tensor3(bad, sym_last_two=True))


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_skew_ratio_never_exceeds_three(d):
    rng = np.random.default_rng(d)
    a = rng.standard_normal((10000, d, d, d))
    a = 0.5 * (a + a.transpose(0, 1, 3, 2))
    b = a - a.transpose(0, 2, 1, 3)
    r = np.sum(b * b, axis=(1, 2, 3)) / np.sum(a * a, axis=(1, 2, 3))
    assert r.max() <= 3 + 1e-9
    # the library routine on a subsample agrees with the vectorized oracle
    for i in range(20):
        assert matalg.skew_defect_ratio(a[i]) == pytest.approx(r[i], rel=1e-12)


@pytest.mark.parametrize("d,expected", [(2, 4.0), (3, 3.0), (4, 3.0), (5, 3.0), (6, 3.0)])
def test_tracefree_constant(d, expected):
    val, a = matalg.tracefree_defect_constant(d, return_maximizer=True)
    assert val == pytest.approx(expected, abs=1e-8)
    assert a.trace_free_last_two and a.sym_last_two
    assert matalg.tracefree_form_value(a) == pytest.approx(val, abs=1e-8)


def test_sphere_moment():
    assert np.array_equal(matalg.sphere_moment(3, exact=True), np.eye(3) / 3)
    M = matalg.sphere_moment(2, 10 ** 6, seed=0)
    assert np.abs(M - np.eye(2) / 2).max() <= 5e-3
    M5 = matalg.sphere_moment(5, 1000, seed=3)
    assert np.trace(M5) == pytest.approx(1, abs=1e-12)
    assert np.array_equal(M5, M5.T)


def test_c_d_closed_form():
    assert c_d(2) == pytest.approx(2 / np.pi)
    assert c_d(3) == pytest.approx(0.5)
    d = 7
    assert c_d(d) == pytest.approx(special.gamma(d / 2) / (np.sqrt(np.pi) * special.gamma((d + 1) / 2)))


@pytest.mark.parametrize("d", [2, 3, 4, 7])
def test_directional_average_rank_one_equality(d):
    A = np.zeros((d, d))
    A[0, 0] = 1
    avg, bound, tol = matalg.directional_average_lower(A)
    assert bound == pytest.approx(c_d(d))
    assert abs(avg - c_d(d)) <= tol


def test_directional_average_identity_and_random():
    avg, _, tol = matalg.directional_average_lower(np.eye(3))
    assert abs(avg - 1) <= tol
    rng = np.random.default_rng(4)
    for _ in range(10):
        A = rng.standard_normal((4, 4))
        avg, bound, tol = matalg.directional_average_lower(A)
        assert avg >= bound - 1e-6
    # independent quadratures agree with the exact path
    A = rng.standard_normal((3, 3))
    ex, _, _ = matalg.directional_average_lower(A)
    gl, _, tgl = matalg.directional_average_lower(A, quadrature="gl", n_samples=200)
    mc, _, tmc = matalg.directional_average_lower(A, quadrature="mc", n_samples=200000, seed=1)
    assert abs(gl - ex) <= tgl
    assert abs(mc - ex) <= tmc


def test_directional_average_rejects_zero():
    with pytest.raises(ValueError):
        matalg.directional_average_lower(np.zeros((2, 2)))


@pytest.mark.parametrize("X,d", [("sym", 2), ("sym", 3), ("sym0", 3), ("sym0", 5)])
def test_rank_one_ratio_is_one(X, d):
    val, a, b = matalg.rank_one_ratio(X, d, n_starts=8)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_rank_one_ratio_analytic_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a, b = rng.standard_normal(2), rng.standard_normal(2)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        c = a @ b
        assert matalg.rank_one_projection_ratio(a, b) ** 2 == pytest.approx((1 - c * c) / (1 + c * c), abs=1e-12)
    e1 = np.array([1.0, 0.0])
    assert matalg.rank_one_projection_ratio(e1, e1) == 0
