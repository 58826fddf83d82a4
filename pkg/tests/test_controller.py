import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svhoc.controller import (
    ControllerConfig, adaptation_factor, estimate_fifth_derivative, estimate_local_error, next_step,
)
from svhoc.errors import ConfigurationError, SolverError
from svhoc.multistep import StepRatios, corrector_coefficients, predictor_coefficients


def test_fixed_point_and_cap():
    eh, beta = 1e-3, 0.01
    assert adaptation_factor(eh * (1 - beta), eh, beta) == pytest.approx(1.0, abs=1e-12)
    assert adaptation_factor(0.0, eh, beta) == pytest.approx(beta ** -0.25, abs=1e-12)


@settings(max_examples=200)
@given(e1=st.floats(0, 10), e2=st.floats(0, 10), beta=st.floats(1e-4, 0.99), eh=st.floats(1e-8, 1))
def test_monotone_and_bounded(e1, e2, beta, eh):
    lo, hi = sorted((e1, e2))
    x_lo, x_hi = adaptation_factor(lo, eh, beta), adaptation_factor(hi, eh, beta)
    assert x_hi <= x_lo + 1e-12
    assert x_lo <= beta ** -0.25 + 1e-12


def test_beta_near_one_never_grows():
    for e in (0.0, 1e-6, 1e-3, 1.0):
        assert adaptation_factor(e, 1e-3, 0.999999) <= 1.0 + 1e-6


def test_threshold_examples():
    cfg = ControllerConfig()
    assert next_step(1e-3, 1.0, cfg).xi == pytest.approx((1 / 1.01) ** 0.25)
    assert next_step(1.0, 1.0, cfg).xi == pytest.approx((1e-3 / 1.00001) ** 0.25)


def test_clamping():
    cfg = ControllerConfig(k_min=1e-3, k_max=0.2)
    assert next_step(0.0, 1.0, cfg).k_next == 0.2
    assert next_step(1e6, 1e-3, cfg).k_next == 1e-3


def test_norms():
    eps = np.array([3.0, -4.0])
    assert ControllerConfig().measure(eps) == 5.0
    assert ControllerConfig(norm="max").measure(eps) == 4.0


@pytest.mark.parametrize("kw", [dict(epsilon_hat=0.0), dict(beta=0.0), dict(beta=1.0), dict(norm="l1"),
                                dict(k_min=1.0, k_max=0.5)])
def test_invalid_config(kw):
    with pytest.raises(ConfigurationError):
        ControllerConfig(**kw)


def test_invalid_norm_value():
    with pytest.raises(SolverError):
        next_step(float("nan"), 1.0, ControllerConfig())


def test_fifth_derivative_estimate_example():
    # equidistant constants: C_C - C_P = -12/125 - 1/5 = -37/125
    one = StepRatios.equidistant()
    cor, pre = corrector_coefficients(one), predictor_coefficients(one)
    d5 = estimate_fifth_derivative(np.array([1.0 + 1e-6]), np.array([1.0]), 0.1, cor.c_loc, pre.c_loc)
    assert d5[0] == pytest.approx(-0.337838, rel=1e-5)
    assert np.all(estimate_fifth_derivative(np.ones(3), np.ones(3), 0.1, cor.c_loc, pre.c_loc) == 0.0)


@pytest.mark.parametrize("k", [0.05, 0.025])
def test_fifth_derivative_of_quintic(k):
    # u = tau^5 / 120 has u^(5) = 1; the quotient carries the opposite sign
    r = StepRatios(1.25, 0.8, 1.1)
    cor, pre = corrector_coefficients(r), predictor_coefficients(r)
    ks = [k, k / r.iota1, k / r.iota2, k / r.iota3]
    t = 1.0 - np.concatenate([[0.0], np.cumsum(ks)])
    u = t**5 / 120
    g = t**4 / 24
    pred = (k * g[1] - np.dot(pre.alpha[1:], u[1:])) / pre.alpha[0]
    corr = (k * g[0] - np.dot(cor.alpha[1:], u[1:])) / cor.alpha[0]
    d5 = estimate_fifth_derivative(np.array([corr]), np.array([pred]), k, cor.c_loc, pre.c_loc)
    assert abs(d5[0]) == pytest.approx(1.0, rel=1e-8)


def test_local_error_recovers_corrector_error():
    # exact history, u' = lam u: estimate tracks the true corrector defect
    lam = -0.8
    one = StepRatios.equidistant()
    cor, pre = corrector_coefficients(one), predictor_coefficients(one)
    k = 0.01
    t = 1.0 - k * np.arange(5)
    u = np.exp(lam * t)
    hist = u[1:]
    pred = (k * lam * hist[0] - np.dot(pre.alpha[1:], hist)) / pre.alpha[0]
    corr = -np.dot(cor.alpha[1:], hist) / (cor.alpha[0] - k * lam)
    eps = estimate_local_error(np.array([corr]), np.array([pred]), k, cor, pre.c_loc, np.eye(1))
    true_defect = cor.alpha[0] * (u[0] - corr) / k
    assert abs(eps[0]) == pytest.approx(abs(true_defect), rel=0.05)


def test_coincident_constants():
    with pytest.raises(SolverError):
        estimate_fifth_derivative(np.ones(1), np.ones(1), 0.1, 0.2, 0.2)
