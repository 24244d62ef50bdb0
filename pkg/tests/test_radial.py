import math

import numpy as np
import pytest
from scipy import integrate, stats

from kornlab import radial
from kornlab.radial import GammaSpec


def test_gamma_spec():
    s = GammaSpec(3.0, 4)
    assert s.shape == 10 and s.scale == 0.25
    with pytest.raises(ValueError):
        GammaSpec(3.0, 0)


def test_moments_basic():
    s = GammaSpec(4.0, 7)
    assert radial.gamma_moment(s, 0) == 1
    assert radial.gamma_moment(s, 1) == pytest.approx((4 * 6 + 1) / 7, rel=1e-14)
    with pytest.raises(ValueError):
        radial.gamma_moment(GammaSpec(1.0, 1), -1.5)


def test_moment_against_scipy():
    s = GammaSpec(2.5, 6)
    dist = stats.gamma(a=s.shape, scale=s.scale)
    assert radial.gamma_moment(s, 2.5) == pytest.approx(dist.expect(lambda x: x ** 2.5), rel=1e-9)


@pytest.mark.parametrize("p,k", [(2, 1), (3, 10), (4.5, 37), (8, 200)])
def test_recurrence(p, k):
    s = GammaSpec(p, k)
    for j in range(9):
        a = radial.gamma_moment(s, j + 1)
        b = s.scale * (s.shape + j) * radial.gamma_moment(s, j)
        assert abs(a - b) <= 1e-12 * a


def test_p_identity_grid():
    for p in np.linspace(1.5, 8, 14):
        for k in (1, 2, 5, 20, 100, 200):
            assert radial.gamma_identity_residual(GammaSpec(p, k)) <= 1e-12


def test_jensen_examples():
    assert radial.jensen_lower(GammaSpec(3.0, 1)) == 0
    assert radial.jensen_lower(GammaSpec(4.0, 20)) == pytest.approx(2.85 ** 4)


def test_abs_moment_against_direct_quadrature():
    p, k = 3.0, 4
    a = p * (k - 1) + 1
    dens = lambda x: stats.gamma.pdf(x, a, scale=1 / k)
    ref = sum(integrate.quad(lambda x: dens(x) * abs(x - 1) ** p, lo, hi, limit=200)[0]
              for lo, hi in ((0, 1), (1, 10), (10, np.inf)))
    assert radial.abs_moment(p, k)[0] == pytest.approx(ref, rel=1e-9)


def test_sandwich():
    rng = np.random.default_rng(0)
    ps = rng.uniform(2, 8, 200)
    ks = rng.integers(1, 201, 200)
    for p, k, lo, ex, hi in radial.sandwich_rows(list(zip(ps, ks))):
        assert lo <= ex * (1 + 1e-10) and ex <= hi * (1 + 1e-10)


def test_majorant():
    for p in (2, 3, 4, 8):
        rep = radial.pointwise_majorant_check(p)
        assert rep.min_slack >= -1e-12
        assert not rep.violations
        # tangency: slack and its derivative vanish at x = p
        assert radial.majorant_slack(p, p) == pytest.approx(0, abs=1e-9 * p ** p)
        if p > 2:  # at p = 2 the slack vanishes identically
            assert rep.argmin == pytest.approx(p, abs=1e-4)
        else:
            assert np.abs(radial.majorant_slack(2, np.linspace(0, 10, 101))).max() <= 1e-12
    # concentrated window 1 + 20/sqrt(k)
    for k in (4, 100):
        xs = np.linspace(0, 1 + 20 / math.sqrt(k), 5001)
        assert radial.pointwise_majorant_check(4, xs).min_slack >= -1e-12


def test_majorant_at_one():
    for p in (2, 3.3, 6):
        expect = (p - 1) ** p + radial.majorant_coeff(p) * (1 - p)
        assert radial.majorant_slack(p, 1.0) == pytest.approx(expect)
        assert expect >= 0


def test_majorant_rejects_small_p():
    with pytest.raises(ValueError):
        radial.pointwise_majorant_check(1.5)


@pytest.mark.parametrize("p", [2, 3, 4, 8])
def test_rate(p):
    rep = radial.fk_upper_and_rate(p, list(range(1, 201, 7)) + [200])
    assert rep.certified
    for k, f, gap in rep.rows:
        assert f <= p - 1 + 1e-10
    if p == 2:
        assert math.isnan(rep.exponent)
        assert rep.rows[0][1] == pytest.approx(1.0)
    else:
        assert rep.exponent == pytest.approx(1.0, abs=0.15)
