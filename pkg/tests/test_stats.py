import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sltrack import stats


@given(st.floats(1e-12, 1 - 1e-12))
def test_inverse_normal_round_trip(p):
    assert stats.normal_cdf(stats.inverse_normal_cdf(p)) == pytest.approx(p, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("p", [0.5, 0.9, 0.9975, 0.999875, 1e-6])
def test_inverse_normal_vs_mpmath(p):
    with mpmath.workdps(40):
        expected = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))
    assert stats.inverse_normal_cdf(p) == pytest.approx(expected, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 2.0])
def test_inverse_normal_domain(p):
    with pytest.raises(ValueError):
        stats.inverse_normal_cdf(p)


@pytest.mark.parametrize("dof", [1, 2, 3, 4, 10])
@pytest.mark.parametrize("x", [0.1, 1.0, 4.6, 13.8])
def test_chi2_cdf_vs_mpmath(dof, x):
    expected = float(mpmath.gammainc(mpmath.mpf(dof) / 2, 0, mpmath.mpf(x) / 2, regularized=True))
    assert stats.chi2_cdf(x, dof) == pytest.approx(expected, rel=1e-12)


def test_chi2_two_dof_closed_form():
    for x in (0.3, 2.0, 9.21):
        assert stats.chi2_cdf(x, 2) == pytest.approx(1 - math.exp(-x / 2), rel=1e-13)
    assert stats.chi2_quantile(0.99, 2) == pytest.approx(-2 * math.log(0.01), rel=1e-12)
    assert stats.chi2_cdf(0.0, 2) == 0.0 and stats.chi2_cdf(math.inf, 2) == 1.0


@given(st.floats(1e-6, 1 - 1e-6), st.integers(1, 200))
def test_chi2_quantile_inverts_cdf(p, dof):
    assert stats.chi2_cdf(stats.chi2_quantile(p, dof), dof) == pytest.approx(p, abs=1e-9)


def test_generalized_factorial():
    assert stats.generalized_factorial(4.0) == pytest.approx(24.0)
    assert stats.generalized_factorial(0.5) == pytest.approx(math.sqrt(math.pi) / 2)
    assert stats.log_generalized_factorial(4.9) == pytest.approx(float(mpmath.loggamma(5.9)), rel=1e-12)
    with pytest.raises(ValueError):
        stats.generalized_factorial(-0.5)


def test_poisson():
    assert sum(stats.poisson_pmf(k, 4.0) for k in range(60)) == pytest.approx(1.0)
    assert stats.poisson_cdf(2, 4.0) == pytest.approx(13 * math.exp(-4))
    assert stats.poisson_sf(5, 4.0) == pytest.approx(1 - stats.poisson_cdf(5, 4.0), rel=1e-12)
    assert stats.poisson_sf(40, 1e-3) > 0.0
    assert stats.poisson_pmf(0, 0.0) == 1.0 and stats.poisson_pmf(-1, 3.0) == 0.0


def test_unit_ball_volume():
    assert stats.unit_ball_volume(2) == pytest.approx(math.pi)
    assert stats.unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)
