import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracsymm.specfun import (AccuracyLossError, DomainError, KernelParams, _euler_integral,
                              beta_fn, critical_exponent, digamma, frac_lap_constant, gamma_fn,
                              gammaln, hyp2f1, hyp2f1_derivative, hyp2f1_series, rgamma,
                              sphere_area, unit_ball_volume)


@pytest.mark.parametrize("N,s", [(1, 0.5), (2, 0.0), (2, 1.0), (3, -0.1), (2.5, 0.5), (True, 0.5)])
def test_kernel_params_rejects_invalid(N, s):
    with pytest.raises(DomainError):
        KernelParams(N, s)


def test_gamma_examples(oracles):
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-15)
    assert gamma_fn(5.0) == pytest.approx(24.0, rel=1e-14)
    for x, ref in oracles["gamma"]:
        assert gamma_fn(x) == pytest.approx(ref, rel=1e-13)


def test_gamma_rejects_nonpositive():
    for x in (0.0, -0.5, -3.0):
        with pytest.raises(DomainError):
            gamma_fn(x)


def test_gamma_agrees_with_math_on_range():
    xs = np.linspace(0.5, 30.0, 400)
    err = max(abs(gamma_fn(x) / math.gamma(x) - 1.0) for x in xs)
    assert err <= 1e-13


def test_gamma_recurrence_log_sample():
    xs = np.geomspace(0.5, 20.0, 200)
    err = max(abs(gamma_fn(x + 1.0) / (x * gamma_fn(x)) - 1.0) for x in xs)
    assert err <= 1e-12


def test_gammaln_rgamma_digamma():
    for x in (0.3, 1.0, 4.2, 55.0):
        assert gammaln(x) == pytest.approx(math.lgamma(x), rel=1e-13, abs=1e-14)
    assert rgamma(0.0) == 0.0 and rgamma(-2.0) == 0.0
    assert rgamma(0.5) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-14)
    assert digamma(1.0) == pytest.approx(-0.5772156649015329, rel=1e-12)
    assert beta_fn(2.0, 3.0) == pytest.approx(1.0 / 12.0, rel=1e-14)


def test_ball_and_sphere_measures():
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)
    assert sphere_area(2) == pytest.approx(2.0 * math.pi)
    assert sphere_area(3) == pytest.approx(4.0 * math.pi)
    for N in range(2, 7):
        assert sphere_area(N) == pytest.approx(N * unit_ball_volume(N), rel=1e-14)


def test_frac_lap_constant_examples(oracles):
    assert frac_lap_constant(KernelParams(2, 0.5)) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)
    assert frac_lap_constant(KernelParams(3, 0.5)) == pytest.approx(1.0 / math.pi ** 2, rel=1e-14)
    for N, s, ref in oracles["frac_lap_constant"]:
        assert frac_lap_constant(KernelParams(N, s)) == pytest.approx(ref, rel=1e-13)


@given(st.integers(2, 8), st.floats(0.01, 0.99))
def test_frac_lap_constant_positive(N, s):
    assert frac_lap_constant(KernelParams(N, s)) > 0.0


@pytest.mark.parametrize("N,s,ref", [(2, 0.5, 4.0), (3, 0.5, 3.0), (3, 0.3, 2.5)])
def test_critical_exponent(N, s, ref):
    assert critical_exponent(KernelParams(N, s)) == pytest.approx(ref, rel=1e-15)


def test_hyp2f1_examples(oracles):
    assert hyp2f1(2.5, 1.5, 3.0, 0.0) == 1.0
    assert hyp2f1(1.0, 1.0, 2.0, 0.5) == pytest.approx(2.0 * math.log(2.0), rel=1e-13)
    for a, b, c, x, ref in oracles["hyp2f1"]:
        assert hyp2f1(a, b, c, x) == pytest.approx(ref, rel=1e-10)


def test_hyp2f1_series_oracle_200_terms():
    x = 0.5
    ref = sum(x ** n / (n + 1) for n in range(200))     # 2F1(1,1;2;x) = sum x^n/(n+1)
    assert hyp2f1(1.0, 1.0, 2.0, x) == pytest.approx(ref, rel=1e-14)


def test_hyp2f1_errors():
    with pytest.raises(DomainError):
        hyp2f1(2.5, 1.5, 1.0, 0.3)
    with pytest.raises(DomainError):
        hyp2f1(1.0, 0.0, 1.0, 0.3)
    with pytest.raises(DomainError):
        hyp2f1(1.0, 1.0, 2.0, -0.1)
    with pytest.raises(AccuracyLossError):
        hyp2f1(1.0, 1.0, 2.0, 1.0 - 1e-11)


@given(st.floats(0.05, 0.5), st.floats(0.01, 5.0), st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_euler_and_series_branches_agree(x, a, b, gap):
    c = b + gap
    series = hyp2f1_series(a, b, c, x)
    euler, _ = _euler_integral(a, b, c, x)
    assert euler == pytest.approx(series, rel=1e-9)


def test_hyp2f1_derivative_examples():
    a, b, c = 1.3, 0.7, 2.1
    assert hyp2f1_derivative(a, b, c, 0.0) == pytest.approx(a * b / c, rel=1e-15)
    h = 1e-5
    fd = (hyp2f1(1, 1, 2, 0.5 + h) - hyp2f1(1, 1, 2, 0.5 - h)) / (2 * h)
    assert hyp2f1_derivative(1.0, 1.0, 2.0, 0.5) == pytest.approx(fd, rel=1e-6)
    assert hyp2f1_derivative(1.0, 1.0, 2.0, 0.5) == pytest.approx(0.5 * hyp2f1(2, 2, 3, 0.5), rel=1e-14)


def test_hyp2f1_derivative_matches_finite_differences_random():
    rng = np.random.default_rng(7)
    h = 1e-5
    for _ in range(100):
        a = rng.uniform(0.1, 5.0)
        b = rng.uniform(0.1, 3.0)
        c = b + rng.uniform(0.1, 3.0)
        x = rng.uniform(0.0 + h, 0.9)
        fd = (hyp2f1(a, b, c, x + h) - hyp2f1(a, b, c, x - h)) / (2.0 * h)
        d = hyp2f1_derivative(a, b, c, x)
        assert d >= 0.0
        assert d == pytest.approx(fd, rel=1e-6)
