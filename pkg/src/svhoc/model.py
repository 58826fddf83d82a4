"""Stochastic volatility model family and the transformed pricing PDE.

The variance follows ``dv = kappa v^a (theta - v) dt + sigma v^b dW_2`` and the
asset ``dS = r S dt + sqrt(v) S dW_1`` under the pricing measure.  After
``tau = T - t``, ``u = exp(r tau) V / K`` and a change of spatial variables that
depends on ``b``, the pricing PDE becomes

    u_tau + a(y) (u_xx + u_yy) + b(y) u_xy + c1(y) u_x + c2(y) u_y = 0

with ``b(y) = 2 rho a(y)`` and ``a(y) < 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from svhoc.errors import ConfigurationError, DomainError

Payoff = Callable[[np.ndarray], np.ndarray]

THREE_HALVES = 1.5

NAMED_MODELS: dict[str, tuple[float, float]] = {
    "heston": (0.0, 0.5),
    "sqr": (0.0, 0.5),
    "garch": (0.0, 1.0),
    "var": (0.0, 1.0),
    "3/2": (0.0, 1.5),
    "three-halves": (0.0, 1.5),
    "sqr-n": (1.0, 0.5),
    "var-n": (1.0, 1.0),
    "3/2-n": (1.0, 1.5),
    "three-halves-n": (1.0, 1.5),
}


def put_payoff(moneyness: np.ndarray) -> np.ndarray:
    """Normalised put payoff max(1 - S/K, 0)."""
    return np.maximum(1.0 - moneyness, 0.0)


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the model family plus contract data.

    The real-world drift of the asset never enters the pricing PDE, so it is
    not stored here.
    """

    a: float
    b: float
    kappa: float = 1.1
    theta: float = 0.3
    sigma: float = 0.3
    rho: float = -0.4
    r: float = 0.05
    strike: float = 100.0
    maturity: float = 2.0

    def __post_init__(self) -> None:
        checks = [
            ("a", self.a >= 0.0, "a must be >= 0"),
            ("b", 0.0 < self.b <= THREE_HALVES, "b must lie in (0, 3/2]"),
            ("kappa", self.kappa > 0.0, "kappa must be > 0"),
            ("theta", self.theta > 0.0, "theta must be > 0"),
            ("sigma", self.sigma > 0.0, "sigma must be > 0"),
            ("rho", -1.0 <= self.rho <= 1.0, "rho must lie in [-1, 1]"),
            ("r", self.r >= 0.0, "r must be >= 0"),
            ("strike", self.strike > 0.0, "strike must be > 0"),
            ("maturity", self.maturity > 0.0, "maturity must be > 0"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigurationError(f"{name}: {msg} (got {getattr(self, name)!r})")

    @property
    def log_branch(self) -> bool:
        return self.b == THREE_HALVES

    @property
    def x_scale(self) -> float:
        """Factor ``s`` in ``x = s ln(S/K)``."""
        return 1.0 if self.log_branch else THREE_HALVES - self.b


def named_model(name: str, **overrides: float) -> ModelParams:
    """Build one of the six named members, e.g. ``named_model("garch", rho=0)``."""
    key = name.strip().lower()
    if key not in NAMED_MODELS:
        raise ConfigurationError(f"model: unknown model {name!r}; choose from {sorted(NAMED_MODELS)}")
    a, b = NAMED_MODELS[key]
    return ModelParams(a=a, b=b, **overrides)


def transform_to_computational(S, v, p: ModelParams):
    S = np.asarray(S, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(S <= 0) or np.any(v <= 0):
        raise DomainError("S and v must be strictly positive")
    if p.log_branch:
        return np.log(S / p.strike), np.log(v) / p.sigma
    e = THREE_HALVES - p.b
    return e * np.log(S / p.strike), v**e / p.sigma


def inverse_transform(x, y, p: ModelParams):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    S = p.strike * np.exp(x / p.x_scale)
    if p.log_branch:
        return S, np.exp(p.sigma * y)
    if np.any(y <= 0):
        raise DomainError("y must be > 0 on the power-law branch")
    return S, (p.sigma * y) ** (1.0 / (THREE_HALVES - p.b))


def pde_coefficients(y, p: ModelParams):
    """Return ``(a_y, b_y, c1_y, c2_y)`` of the transformed PDE at ``y``."""
    y = np.asarray(y, dtype=float)
    sig, rho, r, a, b = p.sigma, p.rho, p.r, p.a, p.b
    kap, th = p.kappa, p.theta

    if p.log_branch:
        ey = np.exp(sig * y)
        a_y = -ey / 2.0
        c1 = ey / 2.0 - r
        c2 = (sig**2 * ey - 2.0 * kap * th * np.exp(sig * y * (a - 1.0))
              + 2.0 * kap * np.exp(a * sig * y)) / (2.0 * sig)
        return a_y, 2.0 * rho * a_y, c1, c2

    if np.any(y <= 0):
        raise DomainError("y must be > 0 on the power-law branch")
    d = 2.0 * b - 3.0
    s1 = sig ** ((2.0 * b - 5.0) / d)
    pw = y ** (-2.0 / d)
    a_y = -s1 * pw * d**2 / (8.0 * sig)
    c1 = (3.0 - 2.0 * b) * (s1 * pw - 2.0 * r * sig) / (4.0 * sig)
    e_mid = (2.0 * b - 1.0) / d
    e_th = (1.0 + 2.0 * a - 2.0 * b) / d
    e_k = (3.0 + 2.0 * a - 2.0 * b) / d
    c2 = (3.0 - 2.0 * b) * (
        2.0 * s1 * y ** (-e_mid) * b
        - 4.0 * sig ** (-e_th) * y ** (-e_th) * kap * th
        + 4.0 * sig ** (-e_k) * y ** (-e_k) * kap
        - s1 * y ** (-e_mid)
    ) / (8.0 * sig)
    return a_y, 2.0 * rho * a_y, c1, c2


def initial_condition(x, p: ModelParams, payoff: Payoff = put_payoff):
    """Transformed payoff u(x, y, 0); independent of y."""
    return payoff(np.exp(np.asarray(x, dtype=float) / p.x_scale))


@dataclass(frozen=True)
class TransformedCoeffs:
    """Coefficient functions of the transformed PDE.

    The mixed-derivative coefficient is tied to the diffusion coefficient by
    ``b_y = 2 rho a_y``, which the compact scheme relies on.
    """

    a_y: Callable[[np.ndarray], np.ndarray]
    c1_y: Callable[[np.ndarray], np.ndarray]
    c2_y: Callable[[np.ndarray], np.ndarray]
    rho: float
    label: str = field(default="custom", compare=False)

    def b_y(self, y):
        return 2.0 * self.rho * self.a_y(y)

    def __call__(self, y):
        a_y = self.a_y(y)
        return a_y, 2.0 * self.rho * a_y, self.c1_y(y), self.c2_y(y)

    @classmethod
    def from_model(cls, p: ModelParams) -> "TransformedCoeffs":
        return cls(
            a_y=lambda y: pde_coefficients(y, p)[0],
            c1_y=lambda y: pde_coefficients(y, p)[2],
            c2_y=lambda y: pde_coefficients(y, p)[3],
            rho=p.rho,
            label=f"a={p.a:g},b={p.b:g}",
        )

    @classmethod
    def constant(cls, a: float, rho: float, c1: float, c2: float) -> "TransformedCoeffs":
        """Frozen coefficients, mainly for consistency studies."""
        if a >= 0:
            raise ConfigurationError("a: diffusion coefficient must be negative")
        full = lambda val: (lambda y: np.full(np.shape(y), float(val)))
        return cls(a_y=full(a), c1_y=full(c1), c2_y=full(c2), rho=rho, label="frozen")
