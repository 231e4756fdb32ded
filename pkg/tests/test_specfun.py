"""Special-function oracles: closed forms, recurrence chains, and scipy/mpmath
cross-checks (scipy and mpmath are test-only dependencies)."""

import math

import mpmath
import numpy as np
import pytest
import scipy.integrate
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from iad.specfun import (DomainError, MIN_ARG, beta_moment, digamma,
                         log_gamma, tetragamma, trigamma)

EULER_GAMMA = 0.5772156649015328606


# ---------------------------------------------------------------- log_gamma

def test_log_gamma_half_integer():
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-14)


def test_log_gamma_small_integers():
    for n, fact in ((1, 1), (2, 1), (3, 2), (5, 24), (11, 3628800)):
        assert log_gamma(float(n)) == pytest.approx(math.log(fact), abs=1e-12)


def test_log_gamma_matches_scipy_over_wide_range():
    x = np.logspace(-10, 8, 400)
    got = log_gamma(x)
    want = scipy.special.gammaln(x)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


@given(st.floats(min_value=1e-6, max_value=1e6))
def test_log_gamma_recurrence(x):
    # Gamma(x+1) = x * Gamma(x)
    lhs = log_gamma(x + 1.0)
    rhs = log_gamma(x) + math.log(x)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


# ------------------------------------------------------------------ digamma

def test_digamma_at_one_is_minus_euler_gamma():
    assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-13)


def test_digamma_at_half():
    assert digamma(0.5) == pytest.approx(-EULER_GAMMA - 2.0 * math.log(2.0),
                                         abs=1e-13)


def test_digamma_ten_and_a_half_via_recurrence_chain():
    # psi(10.5) = psi(0.5) + sum_{k=0}^{9} 1/(0.5+k)
    want = -EULER_GAMMA - 2.0 * math.log(2.0) + sum(1.0 / (0.5 + k)
                                                    for k in range(10))
    assert digamma(10.5) == pytest.approx(want, abs=1e-13)


def test_digamma_matches_scipy_over_wide_range():
    x = np.logspace(-10, 8, 400)
    assert np.allclose(digamma(x), scipy.special.psi(x), rtol=1e-12, atol=1e-12)


@given(st.floats(min_value=1e-2, max_value=1e6))
def test_digamma_recurrence(x):
    assert digamma(x + 1.0) == pytest.approx(digamma(x) + 1.0 / x,
                                             rel=1e-10, abs=1e-10)


# ----------------------------------------------------------------- trigamma

def test_trigamma_at_one_is_pi_squared_over_six():
    assert trigamma(1.0) == pytest.approx(math.pi ** 2 / 6.0, abs=1e-13)


def test_trigamma_at_four():
    want = math.pi ** 2 / 6.0 - 1.0 - 0.25 - 1.0 / 9.0
    assert trigamma(4.0) == pytest.approx(want, abs=1e-12)
    assert trigamma(4.0) == pytest.approx(0.2838229557, abs=1e-9)


def test_trigamma_matches_scipy_over_wide_range():
    x = np.logspace(-10, 8, 400)
    want = scipy.special.polygamma(1, x)
    assert np.allclose(trigamma(x), want, rtol=1e-12, atol=1e-300)


@given(st.floats(min_value=1e-2, max_value=1e6))
def test_trigamma_recurrence(x):
    assert trigamma(x + 1.0) == pytest.approx(trigamma(x) - 1.0 / x ** 2,
                                              rel=1e-9, abs=1e-12)


def test_trigamma_positive_and_decreasing():
    x = np.logspace(-6, 6, 200)
    v = trigamma(x)
    assert np.all(v > 0.0)
    assert np.all(np.diff(v) < 0.0)


# --------------------------------------------------------------- tetragamma

def test_tetragamma_at_one_is_minus_two_zeta_three():
    want = -2.0 * float(mpmath.zeta(3))
    assert tetragamma(1.0) == pytest.approx(want, abs=1e-12)


def test_tetragamma_matches_scipy_over_wide_range():
    x = np.logspace(-6, 6, 300)
    want = scipy.special.polygamma(2, x)
    assert np.allclose(tetragamma(x), want, rtol=1e-11, atol=1e-300)


@given(st.floats(min_value=1e-2, max_value=1e5))
def test_tetragamma_recurrence(x):
    assert tetragamma(x + 1.0) == pytest.approx(
        tetragamma(x) + 2.0 / x ** 3, rel=1e-8, abs=1e-12)


def test_tetragamma_negative_everywhere():
    x = np.logspace(-6, 6, 200)
    assert np.all(tetragamma(x) < 0.0)


# -------------------------------------------------------------- beta_moment

def test_beta_moment_second_moment_example():
    # E[X^2] for Beta(2,3) = a(a+1)/((a+b)(a+b+1)) = 6/30
    assert beta_moment(2.0, 3.0, 2.0) == pytest.approx(0.2, abs=1e-13)


def test_beta_moment_first_moment_is_mean():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.uniform(0.2, 50.0, size=2)
        assert beta_moment(a, b, 1.0) == pytest.approx(a / (a + b), rel=1e-12)


def test_beta_moment_against_quadrature():
    rng = np.random.default_rng(1)
    for _ in range(10):
        a, b = rng.uniform(0.8, 20.0, size=2)
        q = rng.uniform(0.5, 6.0)
        dens = scipy.special.gamma(a + b) / (scipy.special.gamma(a)
                                             * scipy.special.gamma(b))
        val, err = scipy.integrate.quad(
            lambda t: dens * t ** (q + a - 1.0) * (1.0 - t) ** (b - 1.0),
            0.0, 1.0)
        assert beta_moment(a, b, q) == pytest.approx(val, rel=1e-8)


# ----------------------------------------------------------- domain handling

@pytest.mark.parametrize("fn", [log_gamma, digamma, trigamma, tetragamma])
@pytest.mark.parametrize("bad", [0.0, -1.0, MIN_ARG / 2.0,
                                 float("nan"), float("inf")])
def test_rejects_nonpositive_and_nonfinite(fn, bad):
    with pytest.raises(DomainError):
        fn(bad)


def test_rejects_bad_array_element():
    with pytest.raises(DomainError):
        digamma(np.array([1.0, 2.0, -3.0]))


def test_vectorized_shapes_roundtrip():
    x = np.linspace(0.5, 9.5, 12).reshape(3, 4)
    for fn in (log_gamma, digamma, trigamma, tetragamma):
        assert fn(x).shape == (3, 4)
    assert isinstance(digamma(2.5), float)


@settings(max_examples=50)
@given(st.floats(min_value=1e-3, max_value=1e4),
       st.floats(min_value=1e-3, max_value=1e4))
def test_digamma_is_derivative_of_log_gamma(x, h_scale):
    # central finite difference on log_gamma
    h = max(1e-6 * x, 1e-9)
    fd = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h)
    assert digamma(x) == pytest.approx(fd, rel=1e-5, abs=1e-6)
