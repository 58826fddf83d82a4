"""Monte-Carlo reference prices for European puts under the model family.

Independent of the PDE path: Euler-Maruyama in (ln S, v) with full
truncation of the variance, i.e. ``max(v, 0)`` wherever ``v`` feeds a drift
or a diffusion coefficient.
"""

from __future__ import annotations

import math

import numpy as np

from svhoc.errors import ConfigurationError
from svhoc.model import ModelParams


def mc_reference_price(p: ModelParams, S0: float, v0: float, paths: int = 100_000, steps: int = 500,
                       seed: int = 0, batch: int = 50_000) -> tuple[float, float]:
    """Discounted mean put payoff and its standard error."""
    if paths < 2 or steps < 1:
        raise ConfigurationError("paths must be >= 2 and steps >= 1")
    if S0 <= 0 or v0 < 0:
        raise ConfigurationError("S0 must be > 0 and v0 >= 0")
    rng = np.random.default_rng(seed)
    dt = p.maturity / steps
    sq = math.sqrt(dt)
    rho_c = math.sqrt(1.0 - p.rho**2)
    payoffs = np.empty(paths)
    done = 0
    while done < paths:
        m = min(batch, paths - done)
        x = np.full(m, math.log(S0))
        v = np.full(m, float(v0))
        for _ in range(steps):
            z1 = rng.standard_normal(m)
            z2 = p.rho * z1 + rho_c * rng.standard_normal(m)
            vp = np.maximum(v, 0.0)
            x += (p.r - 0.5 * vp) * dt + np.sqrt(vp) * sq * z1
            v += p.kappa * vp**p.a * (p.theta - vp) * dt + p.sigma * vp**p.b * sq * z2
        payoffs[done:done + m] = np.maximum(p.strike - np.exp(x), 0.0)
        done += m
    disc = math.exp(-p.r * p.maturity)
    return disc * float(payoffs.mean()), disc * float(payoffs.std(ddof=1)) / math.sqrt(paths)


def lognormal_put(S0: float, K: float, r: float, T: float, vol: float) -> float:
    """Put value under constant volatility, by quadrature over the terminal log-price.

    Used as the deterministic-variance limit of the family.
    """
    from scipy.integrate import quad

    m = math.log(S0) + (r - 0.5 * vol**2) * T
    s = vol * math.sqrt(T)
    dens = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    upper = (math.log(K) - m) / s
    val, _ = quad(lambda z: (K - math.exp(m + s * z)) * dens(z), -12.0, upper, epsabs=1e-12, epsrel=1e-12)
    return math.exp(-r * T) * val
