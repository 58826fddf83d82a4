from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svhoc.errors import ConfigurationError, DomainError, SolverError
from svhoc.multistep import (
    StepRatios, corrector_coefficients, corrector_system, crank_nicolson_step, predictor_coefficients,
    predictor_rhs,
)

BDF4 = (Fraction(25, 12), Fraction(-4), Fraction(3), Fraction(-4, 3), Fraction(1, 4))
PRED4 = (Fraction(1, 4), Fraction(5, 6), Fraction(-3, 2), Fraction(1, 2), Fraction(-1, 12))


def nodes(r: StepRatios):
    """tau_{n-j} for j = 0..4 with tau_n = 0 and k_n = 1."""
    ks = [1.0, 1 / r.iota1, 1 / r.iota2, 1 / r.iota3]
    return -np.concatenate([[0.0], np.cumsum(ks)])


def order_residual(alpha, t, t_star):
    """Worst relative residual of sum_j alpha_j p(t_j) = p'(t_star) over p = t^0..t^4."""
    alpha = np.asarray(alpha)
    worst = 0.0
    for d in range(5):
        lhs = alpha @ t**d
        rhs = d * t_star ** (d - 1) if d else 0.0
        worst = max(worst, abs(lhs - rhs) / (np.abs(alpha) @ np.abs(t) ** d + abs(rhs)))
    return worst


ratios = st.tuples(*[st.floats(0.2, 5.0)] * 3).map(lambda t: StepRatios(*t))


@settings(max_examples=300, deadline=None)
@given(r=ratios)
def test_order_conditions(r):
    t = nodes(r)
    assert order_residual(predictor_coefficients(r).alpha, t, t[1]) < 1e-11
    assert order_residual(corrector_coefficients(r).alpha, t, t[0]) < 1e-11


def _error_constant(alpha, t, t_star):
    """Leading truncation coefficient r5 / (5! alpha0) with respect to u^(5)."""
    alpha = np.asarray(alpha)
    return (alpha @ t**5 - 5 * t_star**4) / 120 / alpha[0]


@settings(max_examples=100, deadline=None)
@given(r=ratios)
def test_error_constants_match_fifth_moment(r):
    t = nodes(r)
    pre, cor = predictor_coefficients(r), corrector_coefficients(r)
    assert pre.c_loc == pytest.approx(_error_constant(pre.alpha, t, t[1]), rel=1e-9)
    assert cor.c_loc == pytest.approx(_error_constant(cor.alpha, t, t[0]), rel=1e-9)


def test_equidistant_values_exact():
    one = StepRatios.equidistant()
    pre, cor = predictor_coefficients(one), corrector_coefficients(one)
    assert [Fraction(a).limit_denominator(1000) for a in cor.alpha] == list(BDF4)
    assert [Fraction(a).limit_denominator(1000) for a in pre.alpha] == list(PRED4)
    assert Fraction(cor.c_loc).limit_denominator(1000) == Fraction(-12, 125)
    assert Fraction(pre.c_loc).limit_denominator(1000) == Fraction(1, 5)
    np.testing.assert_allclose(cor.alpha, [float(f) for f in BDF4], rtol=1e-15)


@pytest.mark.parametrize("s", [0.5, 2.0])
def test_uniform_rescaling_of_steps(s):
    # multiplying all four steps by s leaves every ratio at 1
    r = StepRatios.from_steps(s, s, s, s)
    np.testing.assert_allclose(corrector_coefficients(r).alpha, [float(f) for f in BDF4], rtol=1e-14)


def test_geometric_ratios_tau4_exact():
    r = StepRatios(1.1, 1.21, 1.331)
    t = nodes(r)
    a = np.array(corrector_coefficients(r).alpha)
    assert abs(a @ t**4 - 0.0) / (np.abs(a) @ t**4) < 1e-12
    p = np.array(predictor_coefficients(r).alpha)
    assert abs(p @ t**4 - 4 * t[1] ** 3) / (np.abs(p) @ t**4) < 1e-12


def test_ratios_from_steps():
    r = StepRatios.from_steps(2.0, 1.0, 4.0, 0.5)
    assert (r.iota1, r.iota2, r.iota3) == (2.0, 0.5, 4.0)


@pytest.mark.parametrize("bad", [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, float("nan"))])
def test_invalid_ratios(bad):
    with pytest.raises((ConfigurationError, DomainError, SolverError)):
        StepRatios(*bad)


def test_predictor_constant_history_scalar():
    pre = predictor_coefficients(StepRatios.equidistant())
    A, rhs = predictor_rhs([np.array([3.0])] * 4, pre, 0.1, np.zeros((1, 1)), np.eye(1), 0.0)
    assert float(rhs[0] / A[0, 0]) == pytest.approx(3.0, rel=1e-14)


def test_predictor_linear_data():
    r = StepRatios(1.3, 0.9, 1.7)
    pre = predictor_coefficients(r)
    k = 0.01
    t = k * nodes(r) + 1.0
    hist = [np.array([t[j]]) for j in range(1, 5)]
    A, rhs = predictor_rhs(hist, pre, k, np.zeros((1, 1)), np.eye(1), np.array([1.0]))
    assert rhs[0] / A[0, 0] == pytest.approx(t[0], rel=1e-13)


@pytest.mark.parametrize("kind", ["predictor", "corrector"])
def test_local_error_constant_by_richardson(kind):
    # u' = lam u from exact history; one-step error ~ alpha0 C k^5 u^(5) / alpha0
    lam = -1.3
    r = StepRatios(1.2, 0.8, 1.5)
    coeffs = predictor_coefficients(r) if kind == "predictor" else corrector_coefficients(r)
    K = np.array([[-lam]])
    M = np.eye(1)
    errs = []
    for k in (0.02, 0.01):
        t = 1.0 + k * nodes(r)
        hist = [np.array([np.exp(lam * t[j])]) for j in range(1, 5)]
        if kind == "predictor":
            A, rhs = predictor_rhs(hist, coeffs, k, K, M, 0.0)
        else:
            A, rhs = corrector_system(hist, coeffs, k, K, M, 0.0)
        U = np.linalg.solve(A, rhs)[0]
        errs.append((np.exp(lam * t[0]) - U) / (k**5 * lam**5 * np.exp(lam * t[0])))
    # normalised error tends to the error constant
    assert abs(errs[1] - coeffs.c_loc) < abs(errs[0] - coeffs.c_loc)
    assert errs[1] == pytest.approx(coeffs.c_loc, rel=0.05)


def test_history_and_kind_checks():
    cor = corrector_coefficients(StepRatios.equidistant())
    with pytest.raises(SolverError):
        corrector_system([np.zeros(1)] * 3, cor, 0.1, np.eye(1), np.eye(1), 0.0)
    with pytest.raises(SolverError):
        predictor_rhs([np.zeros(1)] * 4, cor, 0.1, np.eye(1), np.eye(1), 0.0)


def test_crank_nicolson_second_order():
    lam = 2.0
    errs = []
    for n in (20, 40, 80):
        k = 1.0 / n
        u = np.array([1.0])
        for _ in range(n):
            u = crank_nicolson_step(u, k, np.eye(1), np.array([[lam]]), 0.0, 0.0)
        errs.append(abs(u[0] - np.exp(-lam)))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(orders - 2) < 0.05)
    with pytest.raises(DomainError):
        crank_nicolson_step(np.ones(1), 0.0, np.eye(1), np.eye(1), 0.0, 0.0)
