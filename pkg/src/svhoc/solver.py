"""Time marching of the semi-discrete system and price extraction.

Three Crank-Nicolson steps supply the start-up history.  Every later step
solves the four-step predictor against a single factorisation of ``M_h``,
then the BDF-4 corrector against a fresh factorisation of
``alpha0 M_h + k_n K_h``.  The gap between the two drives the size of the
next step; steps are never rejected.
"""

from __future__ import annotations

import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from svhoc.controller import ControllerConfig, estimate_local_error, next_step
from svhoc.errors import AdaptivityError, DomainError, SolverError
from svhoc.model import ModelParams, TransformedCoeffs, transform_to_computational
from svhoc.multistep import (
    StepRatios,
    corrector_coefficients,
    corrector_system,
    crank_nicolson_system,
    predictor_coefficients,
    predictor_rhs,
)
from svhoc.spatial import BoundarySpec, Grid, SemiDiscreteSystem, assemble, build_grid, initial_vector

log = logging.getLogger(__name__)

STARTUP_STEPS = 3
STARTUP_MESH_RATIO = 0.05


class LinearSolveHandle:
    """Sparse LU factorisation reusable across right-hand sides."""

    def __init__(self, A, label: str = "matrix"):
        self.label = label
        try:
            self._lu = splu(sp.csc_matrix(A))
        except RuntimeError as exc:
            raise SolverError(f"factorisation of {label} failed: {exc}") from exc

    def solve(self, b: np.ndarray) -> np.ndarray:
        x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SolverError(f"solve with {self.label} produced non-finite values")
        return x


@dataclass
class MarchState:
    tau: float
    n: int
    history: deque  # newest first: U_n, U_{n-1}, ...
    steps: deque  # newest first: k_n, k_{n-1}, ...


@dataclass
class RunReport:
    tau: np.ndarray
    k: np.ndarray  # k[0] = 0 by convention
    step_index: np.ndarray  # indices n of the multistep steps
    xi: np.ndarray
    eps_norm: np.ndarray
    U: np.ndarray
    system: SemiDiscreteSystem
    params: ModelParams | None = None
    epsilon_hat: float = float("nan")
    mode: str = "adaptive"
    factorizations: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    prices: list = field(default_factory=list)

    @property
    def grid(self) -> Grid:
        return self.system.grid

    @property
    def n_points(self) -> int:
        return len(self.tau)

    def surface(self) -> np.ndarray:
        return self.system.full_surface(self.U, float(self.tau[-1]))


def _resolve(cfg: ControllerConfig, T: float) -> ControllerConfig:
    return cfg if cfg.k_max is not None else replace(cfg, k_max=T / 10.0)


def march(system: SemiDiscreteSystem, u0: np.ndarray, cfg: ControllerConfig, T: float,
          equidistant: int | None = None, startup_k: float | None = None,
          params: ModelParams | None = None, callback=None) -> RunReport:
    """Integrate ``M U' = g - K U`` from 0 to ``T``.

    ``equidistant`` switches adaptivity off: the horizon is split into
    ``equidistant - 1`` equal steps (start-up included) while the local error
    is still estimated and logged.  ``callback(state, eps, diag)`` is called
    after every multistep step.
    """
    h = system.grid.h
    if equidistant is not None:
        if equidistant < STARTUP_STEPS + 2:
            raise SolverError(f"equidistant mode needs at least {STARTUP_STEPS + 2} grid points")
        k0 = T / (equidistant - 1)
    else:
        k0 = startup_k if startup_k is not None else STARTUP_MESH_RATIO * h**2
    if not 0 < STARTUP_STEPS * k0 < T:
        raise SolverError(f"start-up steps ({STARTUP_STEPS} x {k0:.3g}) do not fit in T={T}")
    cfg = _resolve(cfg, T)
    M, K = system.M, system.K
    counts = {"mass": 0, "startup": 0, "corrector": 0}
    timings = {}

    t0 = time.perf_counter()
    mass = LinearSolveHandle(M, "mass matrix")
    counts["mass"] += 1
    timings["factorize_mass"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    U = np.asarray(u0, dtype=float).copy()
    taus, ks = [0.0], [0.0]
    state = MarchState(tau=0.0, n=0, history=deque([U], maxlen=5), steps=deque(maxlen=4))
    cn_matrix, _ = crank_nicolson_system(U, k0, M, K, 0.0, 0.0)
    cn = LinearSolveHandle(cn_matrix, "Crank-Nicolson matrix")
    counts["startup"] += 1
    for _ in range(STARTUP_STEPS):
        tau_new = state.tau + k0
        _, rhs = crank_nicolson_system(state.history[0], k0, M, K,
                                       system.boundary_source(state.tau), system.boundary_source(tau_new))
        _advance(state, cn.solve(rhs), k0, tau_new)
        taus.append(state.tau)
        ks.append(k0)
    timings["startup"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    step_index, xis, norms = [], [], []
    k_n = k0
    while state.tau < T:
        if state.tau + 1.01 * k_n >= T:
            k_n = T - state.tau
        eps, diag = adaptive_step(state, system, cfg, mass, k_n, land_on=T)
        counts["corrector"] += 1
        taus.append(state.tau)
        ks.append(k_n)
        step_index.append(state.n)
        xis.append(diag.xi)
        norms.append(diag.eps_norm)
        if callback is not None:
            callback(state, eps, diag)
        if diag.eps_norm > cfg.epsilon_hat:
            log.info("step %d: local error %.3e above threshold %.3e", state.n, diag.eps_norm, cfg.epsilon_hat)
        if equidistant is None:
            if diag.xi * k_n < cfg.k_min:
                raise AdaptivityError(f"step {state.n}: step size {diag.xi * k_n:.3e} below floor {cfg.k_min:.3e}")
            k_n = diag.k_next
    timings["march"] = time.perf_counter() - t0

    return RunReport(
        tau=np.array(taus), k=np.array(ks), step_index=np.array(step_index, dtype=int),
        xi=np.array(xis), eps_norm=np.array(norms), U=state.history[0], system=system,
        params=params, epsilon_hat=cfg.epsilon_hat,
        mode="adaptive" if equidistant is None else f"equidistant:{equidistant}",
        factorizations=counts, timings=timings,
    )


def _advance(state: MarchState, U_new: np.ndarray, k: float, tau_new: float) -> None:
    state.history.appendleft(U_new)
    state.steps.appendleft(k)
    state.tau = tau_new
    state.n += 1


def adaptive_step(state: MarchState, system: SemiDiscreteSystem, cfg: ControllerConfig,
                  mass: LinearSolveHandle, k_n: float, land_on: float | None = None):
    """One predictor/corrector step of size ``k_n``; updates ``state`` in place.

    Returns the local error vector and the controller diagnostics.  If
    ``tau + k_n`` equals ``land_on`` in exact arithmetic the new time is set
    to ``land_on`` exactly.
    """
    if len(state.history) < 4 or len(state.steps) < 3:
        raise SolverError("adaptive steps need four start-up values")
    M, K = system.M, system.K
    hist = list(state.history)[:4]
    ratios = StepRatios.from_steps(k_n, *list(state.steps)[:3])
    pre = predictor_coefficients(ratios)
    cor = corrector_coefficients(ratios)
    tau_new = land_on if land_on is not None and k_n == land_on - state.tau else state.tau + k_n

    _, rhs = predictor_rhs(hist, pre, k_n, K, M, system.boundary_source(state.tau))
    U_pred = mass.solve(rhs) / pre.alpha[0]
    A, rhs = corrector_system(hist, cor, k_n, K, M, system.boundary_source(tau_new))
    U_new = LinearSolveHandle(A, f"corrector matrix at step {state.n + 1}").solve(rhs)

    eps = estimate_local_error(U_new, U_pred, k_n, cor, pre.c_loc, M)
    diag = next_step(cfg.measure(eps), k_n, cfg)
    _advance(state, U_new, k_n, tau_new)
    return eps, diag


def _lagrange_weights(nodes: np.ndarray, t: float) -> np.ndarray:
    w = np.ones(len(nodes))
    for m, xm in enumerate(nodes):
        for l, xl in enumerate(nodes):
            if l != m:
                w[m] *= (t - xl) / (xm - xl)
    return w


def interpolate(surface: np.ndarray, grid: Grid, x0: float, y0: float) -> float:
    """Bicubic Lagrange interpolation on the 4x4 block around ``(x0, y0)``."""
    tol = 1e-12 * max(1.0, abs(grid.x_max), abs(grid.y_max))
    if not (grid.x_min - tol <= x0 <= grid.x_max + tol and grid.y_min - tol <= y0 <= grid.y_max + tol):
        raise DomainError(f"point ({x0:.6g}, {y0:.6g}) lies outside the computational domain")
    h = grid.h
    i0 = int(np.clip(math.floor((x0 - grid.x_min) / h) - 1, 0, grid.N - 4))
    j0 = int(np.clip(math.floor((y0 - grid.y_min) / h) - 1, 0, grid.M - 4))
    wx = _lagrange_weights(grid.x[i0:i0 + 4], x0)
    wy = _lagrange_weights(grid.y[j0:j0 + 4], y0)
    return float(wy @ surface[j0:j0 + 4, i0:i0 + 4] @ wx)


def extract_price(U: np.ndarray, system: SemiDiscreteSystem, p: ModelParams, S0: float, v0: float) -> float:
    """Option value ``V(S0, v0, t=0) = K e^{-rT} u(x0, y0, T)``."""
    x0, y0 = transform_to_computational(S0, v0, p)
    u = interpolate(system.full_surface(U, p.maturity), system.grid, float(x0), float(y0))
    return p.strike * math.exp(-p.r * p.maturity) * u


def setup_put(p: ModelParams, S_range=(1.5, 600.0), v_range=(0.1, 0.5), N: int = 201,
              smoothing: bool = True):
    grid = build_grid(p, S_range, v_range, N)
    system = assemble(grid, TransformedCoeffs.from_model(p), BoundarySpec.put(grid, p))
    return system, initial_vector(grid, p, smoothing)


def price_european_put(p: ModelParams, points, S_range=(1.5, 600.0), v_range=(0.1, 0.5), N: int = 201,
                       cfg: ControllerConfig | None = None, equidistant: int | None = None,
                       smoothing: bool = True) -> RunReport:
    """Assemble, march to maturity and price the put at each ``(S0, v0)`` in ``points``."""
    t0 = time.perf_counter()
    system, u0 = setup_put(p, S_range, v_range, N, smoothing)
    t_setup = time.perf_counter() - t0
    report = march(system, u0, cfg or ControllerConfig(), p.maturity, equidistant=equidistant, params=p)
    report.timings["setup"] = t_setup
    report.prices = [(float(S), float(v), extract_price(report.U, system, p, S, v)) for S, v in points]
    return report
