"""Variable-step four-step predictor and BDF-4 corrector for ``M U' = g - K U``.

Both schemes are written as ``sum_j alpha_j U_{n-j} = k_n U'(tau*)`` with
``tau* = tau_{n-1}`` for the predictor and ``tau* = tau_n`` for the corrector.
The weights depend only on the step ratios ``k_n/k_{n-1}``, ``k_n/k_{n-2}``
and ``k_n/k_{n-3}``.  Error constants follow the convention
``u(tau_n) - U_n = C k_n^5 u^(5) + O(k_n^6)``; at equal steps they are
``1/5`` (predictor) and ``-12/125`` (corrector).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import scipy.sparse as sp

from svhoc.errors import DomainError, SolverError


@dataclass(frozen=True)
class StepRatios:
    iota1: float
    iota2: float
    iota3: float

    def __post_init__(self):
        for name in ("iota1", "iota2", "iota3"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be positive and finite (got {val!r})")

    @classmethod
    def from_steps(cls, k_n: float, k_nm1: float, k_nm2: float, k_nm3: float) -> "StepRatios":
        return cls(k_n / k_nm1, k_n / k_nm2, k_n / k_nm3)

    @classmethod
    def equidistant(cls) -> "StepRatios":
        return cls(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class MultistepCoeffs:
    alpha: tuple[float, float, float, float, float]
    c_loc: float
    kind: Literal["predictor", "corrector"]


def _positive(name: str, value: float) -> float:
    if not value > 0:
        raise SolverError(f"{name} denominator is not positive ({value!r})")
    return value


def predictor_coefficients(r: StepRatios) -> MultistepCoeffs:
    i1, i2, i3 = r.iota1, r.iota2, r.iota3
    p = 2*i1*i2*i3 + i3*i1**2 + i2*i1**2 + i2**2*i3 + i1*i2**2
    phi0 = (i1**3*i3*i2**2 + 3*i2**2*i3*i1 + 4*i1**2*i3*i2 + 2*i1**3*i3*i2
            + 3*i1**2*i2**2*i3 + i2**2*i1**3 + 2*i1**2*i2**2
            + i2**2*i3 + 2*i1*i2*i3 + i1*i2**2 + i3*i1**2 + i1**3*i3 + i1**3*i2 + i2*i1**2)
    _positive("predictor phi0", phi0)
    _positive("predictor alpha1", p)

    a0 = p / phi0
    a1 = (i1**3*i2 - 2*i1*i2*i3 - i3*i1**2 - i2*i1**2 - i2**2*i3 - i1*i2**2
          + 3*i2**2*i3*i1 + 4*i1**2*i3*i2 + 2*i1**2*i2**2 + i1**3*i3) / p
    a2 = -p / _positive("predictor alpha2", (i2 + i3) * (i1 + 1))
    a3 = i2**2 * (i1*i2 + i1*i3 + i2*i3) / _positive("predictor alpha3", (i1*i2 + i2 + i1) * (i2 + i1))
    d4 = (i1*i2*i3 + i2*i3 + i1*i3 + i1*i2) * (i1*i2 + i1*i3 + i2*i3) * (i2 + i3)
    a4 = -(i2 + i1) * i2**2 * i3**4 / _positive("predictor alpha4", d4)

    c_loc = ((i1 + 1) * (i1*i2 + i2 + i1) * (i1*i2*i3 + i2*i3 + i1*i3 + i1*i2)
             / _positive("predictor error constant", 120 * i1**3 * i3 * i2**2))
    return MultistepCoeffs((a0, a1, a2, a3, a4), c_loc, "predictor")


def corrector_coefficients(r: StepRatios) -> MultistepCoeffs:
    i1, i2, i3 = r.iota1, r.iota2, r.iota3
    s4 = i1*i2*i3 + i2*i3 + i1*i3 + i1*i2
    s3 = i1*i2 + i2 + i1
    d0 = _positive("corrector alpha0", s4 * s3 * (i1 + 1))
    a0 = (3*i2**2*i1**3 + 4*i1**3*i3*i2**2 + 6*i1**3*i3*i2 + 2*i1**3*i2 + 2*i1**3*i3
          + 9*i1**2*i2**2*i3 + 4*i1**2*i2**2 + i2*i1**2) / d0 \
        + (8*i1**2*i3*i2 + i3*i1**2 + 6*i2**2*i3*i1 + i1*i2**2 + 2*i1*i2*i3 + i2**2*i3) / d0

    d1 = _positive("corrector alpha1", (i1*i2 + i1*i3 + i2*i3) * (i2 + i1))
    a1 = -(3*i2**2*i3*i1 + 4*i1**2*i3*i2 + 2*i1**3*i3*i2 + 3*i1**2*i2**2*i3
           + i1**3*i3*i2**2 + i2**2*i1**3 + 2*i1**2*i2**2 + i2**2*i3) / d1 \
        - (2*i1*i2*i3 + i1*i2**2 + i3*i1**2 + i1**3*i3 + i1**3*i2 + i2*i1**2) / d1

    a2 = (i1**2*i2**2 + i1**2*i2**2*i3 + 2*i1**2*i3*i2 + i2*i1**2 + i3*i1**2
          + 2*i2**2*i3*i1 + i1*i2**2 + 2*i1*i2*i3 + i2**2*i3) \
        / _positive("corrector alpha2", (i1 + 1) * (i2 + i3))

    a3 = -(i2*i3 + i1*i3 + i3*i1**2 + 2*i1*i2*i3 + i1**2*i3*i2 + i2*i1**2 + i1*i2) * i2**2 \
        / _positive("corrector alpha3", i2*i1**2 + i1*i2**2 + 2*i1*i2 + i2**2 + i1**2)

    phi4 = (i3**3*i1**2 + 2*i1*i3**3*i2 + 4*i1*i2**2*i3**2 + i2**2*i3**3
            + 2*i1**2*i2**2*i3**2 + i2**2*i3**3*i1 + i2**3*i3**2
            + i1**2*i2**3 + i2*i3**3*i1**2 + i2**3*i3**2*i1 + 3*i1**2*i2*i3**2
            + 3*i1**2*i2**2*i3 + i2**3*i3*i1**2 + 2*i1*i2**3*i3)
    a4 = (i2 + i1 + i1**2 + 2*i1*i2 + i2*i1**2) * i2**2 * i3**4 / _positive("corrector phi4", phi4)

    n_loc = 120 * i1**3 * i2**2 * i3 * (
        4*i1**3*i3*i2**2 + 6*i3*i1**3*i2 + 2*i3*i1**3 + 3*i2**2*i1**3 + 2*i2*i1**3
        + 8*i1**2*i3*i2 + 9*i1**2*i2**2*i3 + i1**2*i3 + 4*i1**2*i2**2 + i2*i1**2
        + 6*i2**2*i3*i1 + 2*i1*i2*i3 + i1*i2**2 + i3*i2**2)
    c_loc = -(s4**2) * (i1 + 1)**2 * s3**2 / _positive("corrector error constant", n_loc)
    return MultistepCoeffs((a0, a1, a2, a3, a4), c_loc, "corrector")


def _check_history(history: Sequence[np.ndarray], coeffs: MultistepCoeffs, kind: str):
    if coeffs.kind != kind:
        raise SolverError(f"expected {kind} coefficients, got {coeffs.kind}")
    if len(history) < 4:
        raise SolverError(f"multistep history needs 4 vectors, got {len(history)}")


def predictor_rhs(history, coeffs: MultistepCoeffs, k_n: float, K, M, g_prev):
    """Linear system ``(alpha0 M, rhs)`` whose solution is the predicted value.

    ``history`` is ``[U_{n-1}, U_{n-2}, U_{n-3}, U_{n-4}]``.
    """
    _check_history(history, coeffs, "predictor")
    a = coeffs.alpha
    rhs = k_n * (g_prev - K @ history[0])
    rhs = rhs - M @ sum(a[j] * history[j - 1] for j in range(1, 5))
    return a[0] * M, rhs


def corrector_system(history, coeffs: MultistepCoeffs, k_n: float, K, M, g_n):
    """Linear system ``(alpha0 M + k_n K, rhs)`` of the BDF-4 step."""
    _check_history(history, coeffs, "corrector")
    a = coeffs.alpha
    rhs = k_n * g_n - M @ sum(a[j] * history[j - 1] for j in range(1, 5))
    return a[0] * M + k_n * K, rhs


def crank_nicolson_system(U_prev, k: float, M, K, g_prev, g_n):
    """``(M + k/2 K, (M - k/2 K) U_prev + k/2 (g_n + g_prev))``."""
    if not k > 0:
        raise DomainError(f"step must be positive (got {k!r})")
    half = 0.5 * k
    return M + half * K, (M - half * K) @ U_prev + half * (g_n + g_prev)


def crank_nicolson_step(U_prev, k: float, M, K, g_prev, g_n):
    A, rhs = crank_nicolson_system(U_prev, k, M, K, g_prev, g_n)
    if sp.issparse(A):
        from scipy.sparse.linalg import spsolve
        out = spsolve(sp.csc_matrix(A), rhs)
    else:
        out = np.linalg.solve(np.atleast_2d(A), np.atleast_1d(rhs))
    if not np.all(np.isfinite(out)):
        raise SolverError("Crank-Nicolson solve produced non-finite values")
    return out
