"""Local error estimation from the predictor/corrector gap and step-size choice."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from svhoc.errors import ConfigurationError, SolverError
from svhoc.multistep import MultistepCoeffs


@dataclass(frozen=True)
class ControllerConfig:
    epsilon_hat: float = 1e-3
    beta: float = 0.01
    norm: Literal["l2", "max"] = "l2"
    k_min: float = 1e-12
    k_max: float | None = None  # None: a tenth of the horizon, resolved by the solver

    def __post_init__(self):
        if not self.epsilon_hat > 0:
            raise ConfigurationError(f"epsilon_hat: must be > 0 (got {self.epsilon_hat!r})")
        if not 0 < self.beta < 1:
            raise ConfigurationError(f"beta: must lie in (0, 1) (got {self.beta!r})")
        if not (self.k_min > 0 and (self.k_max is None or self.k_min <= self.k_max)):
            raise ConfigurationError(f"k_min/k_max: need 0 < k_min <= k_max (got {self.k_min!r}, {self.k_max!r})")
        if self.norm not in ("l2", "max"):
            raise ConfigurationError(f"norm: unknown norm {self.norm!r}")

    def measure(self, eps: np.ndarray) -> float:
        """Raw 2-norm (not scaled by vector length) or max-norm."""
        if self.norm == "max":
            return float(np.max(np.abs(eps)))
        return float(np.linalg.norm(eps))


@dataclass(frozen=True)
class StepDiagnostics:
    eps_norm: float
    xi: float
    k_next: float


def _constants_gap(c_cor: float, c_pre: float) -> float:
    gap = c_cor - c_pre
    if abs(gap) < 1e-14:
        raise SolverError(f"predictor and corrector error constants coincide ({c_cor!r}, {c_pre!r})")
    return gap


def estimate_fifth_derivative(U_n, U_pred, k_n: float, c_cor: float, c_pre: float):
    """``(U_n - U_pred) / (k_n^5 (C_cor - C_pre))``.

    With the error-constant convention of :mod:`svhoc.multistep` this equals
    ``-u^(5)`` to first order; only its magnitude feeds the controller.
    """
    return (np.asarray(U_n) - np.asarray(U_pred)) / (k_n**5 * _constants_gap(c_cor, c_pre))


def estimate_local_error(U_n, U_pred, k_n: float, cor: MultistepCoeffs, c_pre: float, M):
    """Leading local error ``-alpha0 C_cor M k_n^4 d5``, with ``d5`` the estimate above."""
    diff = np.asarray(U_n) - np.asarray(U_pred)
    scaled = diff * (-cor.alpha[0] * cor.c_loc / (k_n * _constants_gap(cor.c_loc, c_pre)))
    return M @ scaled


def adaptation_factor(eps_norm: float, epsilon_hat: float, beta: float) -> float:
    return (epsilon_hat / (epsilon_hat * beta + eps_norm)) ** 0.25


def next_step(eps_norm: float, k_n: float, cfg: ControllerConfig) -> StepDiagnostics:
    """Next step size ``xi k_n`` clamped to ``[k_min, k_max]``."""
    if eps_norm < 0 or not np.isfinite(eps_norm):
        raise SolverError(f"invalid local error norm {eps_norm!r}")
    xi = adaptation_factor(eps_norm, cfg.epsilon_hat, cfg.beta)
    k_max = float("inf") if cfg.k_max is None else cfg.k_max
    k_next = min(max(xi * k_n, cfg.k_min), k_max)
    return StepDiagnostics(eps_norm=float(eps_norm), xi=float(xi), k_next=float(k_next))
