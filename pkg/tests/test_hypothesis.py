import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from countstat.distributions import Binomial, ChiSquare, Exponential, Gaussian, Poisson
from countstat.hypothesis import TestSetup, neyman_test, p_value, z_value


def test_reference_p_and_z():
    p = p_value(TestSetup(Poisson(3.8)), 17)
    assert p == pytest.approx(5.7e-7, rel=0.02)
    assert z_value(p) == pytest.approx(4.9, abs=0.05)
    # 30-digit reference for Z(5.7e-7)
    assert z_value(5.7e-7) == pytest.approx(4.8657908935622026315, rel=1e-10)


def test_z_value_examples():
    assert z_value(0.5) == 0.0
    assert z_value(0.15865525393145705141) == pytest.approx(1.0, rel=1e-12)
    assert z_value(0.05) == pytest.approx(1.6448536269514727149, rel=1e-12)
    assert z_value(0.9) < 0
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            z_value(bad)


@given(st.floats(1e-12, 0.5), st.floats(1e-12, 0.5))
def test_z_value_monotone_decreasing(p1, p2):
    if p1 < p2:
        assert z_value(p1) >= z_value(p2)


def test_p_value_accepts_distribution_or_setup():
    assert p_value(Gaussian(), 1.0) == p_value(TestSetup(Gaussian()), 1.0)


@pytest.mark.parametrize("mu", [0.5, 3.8, 12.0])
def test_discrete_p_value_includes_observed(mu):
    d = Poisson(mu)
    for x0 in range(0, 25):
        direct = 1.0 - math.fsum(d.density(j) for j in range(x0))
        assert p_value(d, x0) == pytest.approx(direct, abs=1e-12)


def test_continuous_p_values_are_uniform():
    rng = np.random.default_rng(2024)
    x = rng.normal(size=5000)
    p = np.array([p_value(Gaussian(), v) for v in x])
    assert stats.kstest(p, "uniform").pvalue > 1e-3
    y = rng.chisquare(3, size=5000)
    q = np.array([p_value(ChiSquare(3), v) for v in y])
    assert stats.kstest(q, "uniform").pvalue > 1e-3


def test_discrete_p_values_are_conservative():
    # P(p <= alpha) <= alpha for a discrete null, checked exactly
    d = Poisson(3.8)
    for alpha in (0.01, 0.05, 0.1, 0.3):
        mass = math.fsum(d.density(x) for x in range(60) if p_value(d, x) <= alpha)
        assert mass <= alpha + 1e-15


def test_gaussian_test_power():
    dec = neyman_test(TestSetup(Gaussian(0, 1), Gaussian(3, 1), 0.05), 2.0)
    assert dec.threshold == pytest.approx(1.6448536269514727149, rel=1e-12)
    assert dec.reject
    assert dec.power == pytest.approx(0.91231453675029643065, rel=1e-10)
    assert dec.beta + dec.power == pytest.approx(1.0)


def test_continuous_threshold_has_size_alpha():
    for null in (ChiSquare(4), Exponential(0.7)):
        dec = neyman_test(TestSetup(null, alpha=0.01), 0.0)
        assert null.tail(dec.threshold) == pytest.approx(0.01, abs=1e-9)
        assert not dec.reject


@pytest.mark.parametrize("alpha", [0.001, 0.05, 0.2])
@pytest.mark.parametrize("null", [Poisson(3.8), Poisson(0.3), Binomial(20, 0.4)], ids=repr)
def test_discrete_threshold_is_smallest(null, alpha):
    t = neyman_test(TestSetup(null, alpha=alpha), 0).threshold
    assert t == int(t)
    assert null.tail(t + 1) <= alpha
    assert null.tail(t) > alpha


@given(st.floats(0.001, 0.5), st.integers(0, 30))
def test_decision_consistent_with_p_value(alpha, x0):
    # reject iff P(x > x0 - 1) = P(x >= x0) is at most alpha
    null = Poisson(3.8)
    dec = neyman_test(TestSetup(null, alpha=alpha), x0)
    assert dec.reject == (p_value(null, x0) <= alpha)


def test_discrete_power_uses_strict_exceedance():
    dec = neyman_test(TestSetup(Poisson(3.8), Poisson(17.0), 0.05), 17)
    expected = 1.0 - math.fsum(Poisson(17.0).density(j) for j in range(int(dec.threshold) + 1))
    assert dec.power == pytest.approx(expected, abs=1e-12)


def test_setup_rejects_bad_alpha():
    for a in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            TestSetup(Gaussian(), alpha=a)
