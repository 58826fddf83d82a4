import math

import numpy as np
import pytest
import sympy as s
from hypothesis import given, settings, strategies as st

from svhoc.errors import ConfigurationError, DomainError
from svhoc.model import (
    NAMED_MODELS, ModelParams, TransformedCoeffs, initial_condition, inverse_transform, named_model,
    pde_coefficients, put_payoff, transform_to_computational,
)

MODELS = [named_model(n) for n in ("heston", "garch", "3/2", "sqr-n", "var-n", "3/2-n")] + [ModelParams(a=0.75, b=0.75)]


def _original_generator(p):
    """Symbolic ``u -> u_tau`` in (S, v) for u = e^{r tau} V / K, built from the SDEs directly."""
    S, v = s.symbols("S v", positive=True)
    sig, rho, r, kap, th = (s.nsimplify(z) for z in (p.sigma, p.rho, p.r, p.kappa, p.theta))
    a, b = s.nsimplify(p.a), s.nsimplify(p.b)

    def gen(U):
        return (v * S**2 * s.diff(U, S, 2) / 2 + rho * sig * v ** (b + s.Rational(1, 2)) * S * s.diff(U, S, v)
                + sig**2 * v ** (2 * b) * s.diff(U, v, 2) / 2 + r * S * s.diff(U, S)
                + kap * v**a * (th - v) * s.diff(U, v))

    return S, v, gen


@pytest.mark.parametrize("p", MODELS, ids=lambda p: f"a={p.a},b={p.b}")
def test_transformed_coefficients_match_chain_rule_oracle(p):
    S, v, gen = _original_generator(p)
    X, Y = s.symbols("x y")
    K = s.nsimplify(p.strike)
    bb = s.nsimplify(p.b)
    sig = s.nsimplify(p.sigma)
    if p.log_branch:
        xs, ys = s.log(S / K), s.log(v) / sig
    else:
        xs, ys = (s.Rational(3, 2) - bb) * s.log(S / K), v ** (s.Rational(3, 2) - bb) / sig
    w = s.sin(X + 2 * Y) + X**2 * Y + s.exp(X / 3)
    lhs = gen(w.subs({X: xs, Y: ys}))
    f_lhs = s.lambdify((S, v), lhs)
    derivs = [s.lambdify((X, Y), s.diff(w, *d)) for d in ((X, 2), (Y, 2), (X, Y), (X,), (Y,))]
    for S0, v0 in [(80.0, 0.2), (100.0, 0.3), (130.0, 0.45)]:
        x0, y0 = transform_to_computational(S0, v0, p)
        a_y, b_y, c1, c2 = pde_coefficients(y0, p)
        wxx, wyy, wxy, wx, wy = (f(float(x0), float(y0)) for f in derivs)
        rhs = -(a_y * (wxx + wyy) + b_y * wxy + c1 * wx + c2 * wy)
        assert f_lhs(S0, v0) == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("p", MODELS, ids=lambda p: f"a={p.a},b={p.b}")
def test_diffusion_negative_and_mixed_term_tied(p):
    lo, hi = (float(transform_to_computational(100.0, v, p)[1]) for v in (0.1, 0.5))
    y = np.linspace(lo, hi, 7)
    a_y, b_y, _, _ = pde_coefficients(y, p)
    assert np.all(a_y < 0)
    np.testing.assert_allclose(b_y, 2 * p.rho * a_y)


def test_garch_coefficients_closed_form():
    p = named_model("garch")
    y = np.array([1.0, 2.0])
    a_y, _, c1, _ = pde_coefficients(y, p)
    np.testing.assert_allclose(a_y, -p.sigma**2 * y**2 / 8)
    np.testing.assert_allclose(c1, (p.sigma**2 * y**2 - 2 * p.r) / 4)


@settings(max_examples=50, deadline=None)
@given(S=st.floats(0.5, 1000), v=st.floats(0.01, 2.0), name=st.sampled_from(sorted(NAMED_MODELS)))
def test_transform_round_trip(S, v, name):
    p = named_model(name)
    S2, v2 = inverse_transform(*transform_to_computational(S, v, p), p)
    assert S2 == pytest.approx(S, rel=1e-12)
    assert v2 == pytest.approx(v, rel=1e-12)


def test_initial_condition_is_normalised_put():
    p = named_model("heston")
    S = np.array([50.0, 100.0, 150.0])
    x, _ = transform_to_computational(S, 0.3, p)
    np.testing.assert_allclose(initial_condition(x, p), np.maximum(1 - S / p.strike, 0), atol=1e-15)
    assert put_payoff(np.array([2.0]))[0] == 0.0


@pytest.mark.parametrize("field,value", [("b", 0.0), ("b", 1.6), ("a", -0.1), ("sigma", 0.0), ("rho", 1.5),
                                         ("kappa", -1.0), ("maturity", 0.0), ("strike", -5.0)])
def test_invalid_params_name_the_field(field, value):
    kw = dict(a=0.0, b=1.0)
    kw[field] = value
    with pytest.raises(ConfigurationError, match=f"^{field}:"):
        ModelParams(**kw)


def test_domain_errors():
    p = named_model("garch")
    with pytest.raises(DomainError):
        transform_to_computational(-1.0, 0.3, p)
    with pytest.raises(DomainError):
        pde_coefficients(np.array([-1.0]), p)
    with pytest.raises(ConfigurationError):
        named_model("sabr")


def test_constant_coeffs():
    c = TransformedCoeffs.constant(-0.3, 0.2, 1.0, -1.0)
    a, b, c1, c2 = c(np.zeros(3))
    assert np.all(a == -0.3) and np.allclose(b, -0.12) and np.all(c1 == 1.0) and np.all(c2 == -1.0)
    with pytest.raises(ConfigurationError):
        TransformedCoeffs.constant(0.3, 0.0, 0.0, 0.0)
    assert math.isclose(named_model("garch").x_scale, 0.5)
