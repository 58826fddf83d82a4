"""Fourth-order compact semi-discretisation on a uniform square mesh.

Dividing the transformed PDE by ``A(y) = -a(y) > 0`` gives

    u_xx + u_yy + 2 rho u_xy + g1(y) u_x + g2(y) u_y = f,   f = u_tau / A(y)

with ``g1 = c1/a`` and ``g2 = c2/a``.  Central differences leave an ``h^2/12``
truncation term made of third and fourth derivatives.  Differentiating the
equation itself expresses all of them through ``f`` and derivatives that a
3x3 stencil resolves to second order, which yields

    [L_h - h^2/12 E_h] U = [I + h^2/12 L_h] F

with ``L_h`` the central-difference operator.  Both sides are 9-point
stencils; the left becomes ``-K_h`` and the right, with ``F = U_tau / A``,
becomes ``M_h``.  Equal mesh widths in x and y are what let the two pure
fourth derivatives combine into compact terms.

Unknowns live on x-interior columns and on every y row, including ``y_min``
and ``y_max``.  Stencil references beyond the y rows are ghost values filled
by quartic one-sided extrapolation; the x edges carry Dirichlet data.
Ordering is lexicographic with x fastest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from svhoc.errors import ConfigurationError, SolverError
from svhoc.model import ModelParams, TransformedCoeffs, initial_condition, put_payoff, transform_to_computational

# ghost = sum(EXTRAP[k] * u[k]) for the five nodes nearest the edge, nearest first
EXTRAP = np.array([5.0, -10.0, 10.0, -5.0, 1.0])


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    y_min: float
    N: int
    M: int

    def __post_init__(self):
        if self.N < 5 or self.M < 5:
            raise ConfigurationError(f"grid: need N >= 5 and M >= 5 (got N={self.N}, M={self.M})")
        if not self.x_max > self.x_min:
            raise ConfigurationError("grid: x_max must exceed x_min")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.N - 1)

    @property
    def y_max(self) -> float:
        return self.y_min + (self.M - 1) * self.h

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.N)

    @property
    def y(self) -> np.ndarray:
        return self.y_min + self.h * np.arange(self.M)

    @property
    def n_unknowns(self) -> int:
        return (self.N - 2) * self.M

    def index(self, i, j):
        """Unknown index of node (i, j); ``1 <= i <= N-2``."""
        return np.asarray(j) * (self.N - 2) + np.asarray(i) - 1


def build_grid(p: ModelParams, S_range=(1.5, 600.0), v_range=(0.1, 0.5), N: int = 201) -> Grid:
    """Uniform mesh covering the image of ``S_range x v_range``.

    x spans exactly the transformed S interval; y starts at the image of
    ``v_lo`` and steps by ``h`` until it covers the image of ``v_hi``.
    """
    s_lo, s_hi = S_range
    v_lo, v_hi = v_range
    if not (0 < s_lo < s_hi) or not (0 < v_lo < v_hi):
        raise ConfigurationError(f"grid: degenerate ranges S={S_range}, v={v_range}")
    if N < 5:
        raise ConfigurationError(f"grid: N must be >= 5 (got {N})")
    (x_lo, x_hi), (y_lo, y_hi) = transform_to_computational(
        np.array([s_lo, s_hi]), np.array([v_lo, v_hi]), p
    )
    h = (x_hi - x_lo) / (N - 1)
    M = int(math.ceil((y_hi - y_lo) / h - 1e-9)) + 1
    return Grid(float(x_lo), float(x_hi), float(y_lo), N, max(M, 5))


@dataclass(frozen=True)
class BoundarySpec:
    """Dirichlet data on the x edges as functions of tau, with tau-derivatives."""

    lower: Callable[[float], float]
    lower_dot: Callable[[float], float]
    upper: Callable[[float], float] = lambda tau: 0.0
    upper_dot: Callable[[float], float] = lambda tau: 0.0

    @classmethod
    def put(cls, grid: Grid, p: ModelParams) -> "BoundarySpec":
        """Deep in-the-money bound ``K e^{-r tau} - S`` at x_min, zero at x_max."""
        m = math.exp(grid.x_min / p.x_scale)
        r = p.r
        return cls(
            lower=lambda tau: 1.0 - math.exp(r * tau) * m,
            lower_dot=lambda tau: -r * math.exp(r * tau) * m,
        )

    @classmethod
    def zero(cls) -> "BoundarySpec":
        z = lambda tau: 0.0
        return cls(z, z, z, z)


@dataclass(frozen=True)
class SemiDiscreteSystem:
    """``M U_tau = g(tau) - K U`` on the grid unknowns."""

    grid: Grid
    M: sp.csc_matrix
    K: sp.csc_matrix
    bc: BoundarySpec
    # g(tau) = gk_lo * lower(tau) - gm_lo * lower_dot(tau) + (same for upper)
    gk_lo: np.ndarray = field(repr=False)
    gm_lo: np.ndarray = field(repr=False)
    gk_hi: np.ndarray = field(repr=False)
    gm_hi: np.ndarray = field(repr=False)

    def boundary_source(self, tau: float) -> np.ndarray:
        bc = self.bc
        return (self.gk_lo * bc.lower(tau) - self.gm_lo * bc.lower_dot(tau)
                + self.gk_hi * bc.upper(tau) - self.gm_hi * bc.upper_dot(tau))

    def rhs(self, tau: float, U: np.ndarray) -> np.ndarray:
        """``g(tau) - K U``."""
        return self.boundary_source(tau) - self.K @ U

    def full_surface(self, U: np.ndarray, tau: float) -> np.ndarray:
        """Values on all nodes as an ``(M, N)`` array, Dirichlet columns included."""
        g = self.grid
        out = np.empty((g.M, g.N))
        out[:, 1:-1] = U.reshape(g.M, g.N - 2)
        out[:, 0] = self.bc.lower(tau)
        out[:, -1] = self.bc.upper(tau)
        return out


def boundary_source(tau: float, system: SemiDiscreteSystem) -> np.ndarray:
    return system.boundary_source(tau)


_D = {
    0: np.array([0.0, 1.0, 0.0]),
    1: np.array([-0.5, 0.0, 0.5]),
    2: np.array([1.0, -2.0, 1.0]),
}


def _stencil(px: int, py: int, h: float) -> np.ndarray:
    """3x3 weights of the central difference d^px/dx^px d^py/dy^py, indexed [dx+1, dy+1]."""
    return np.outer(_D[px], _D[py]) / h ** (px + py)


def _derivatives(fn, y, delta):
    f0 = fn(y)
    fp = fn(y + delta)
    fm = fn(y - delta)
    return f0, (fp - fm) / (2 * delta), (fp - 2 * f0 + fm) / delta**2


def compact_stencils(coeffs: TransformedCoeffs, y: np.ndarray, h: float):
    """Per-row 3x3 stencils of the operators applied to ``u`` and to ``f``.

    Returns ``(Kop, Fop)`` of shape ``(len(y), 3, 3)`` such that
    ``sum(Kop * u) = sum(Fop * f) + O(h^4)`` around each node.
    """
    rho = coeffs.rho
    delta = 1e-4 * np.maximum(1.0, np.abs(y))
    g1 = lambda t: coeffs.c1_y(t) / coeffs.a_y(t)
    g2 = lambda t: coeffs.c2_y(t) / coeffs.a_y(t)
    g1, g1p, g1pp = _derivatives(g1, y, delta)
    g2, g2p, g2pp = _derivatives(g2, y, delta)

    # coefficient arrays over rows, keyed by derivative order (px, py)
    low = {
        (2, 0): 1.0, (0, 2): 1.0, (1, 1): 2.0 * rho,
        (1, 0): g1, (0, 1): g2,
    }
    corr = {
        (2, 2): -2.0 - 4.0 * rho**2,
        (2, 1): -4.0 * rho * g1 - 2.0 * g2,
        (1, 2): -4.0 * rho * g2 - 2.0 * g1,
        (2, 0): -2.0 * rho * g1p - g1**2,
        (0, 2): -g2**2 - 2.0 * g2p,
        (1, 1): -2.0 * rho * g2p - 2.0 * g1 * g2 - 2.0 * g1p,
        (1, 0): -g2 * g1p - g1pp,
        (0, 1): -g2 * g2p - g2pp,
    }
    n = len(y)
    L = np.zeros((n, 3, 3))
    E = np.zeros((n, 3, 3))
    for key, c in low.items():
        L += np.multiply.outer(np.broadcast_to(c, (n,)), _stencil(*key, h))
    for key, c in corr.items():
        E += np.multiply.outer(np.broadcast_to(c, (n,)), _stencil(*key, h))
    ident = np.zeros((3, 3))
    ident[1, 1] = 1.0
    Kop = L - h**2 / 12.0 * E
    Fop = ident + h**2 / 12.0 * L
    return Kop, Fop


def assemble(grid: Grid, coeffs: TransformedCoeffs, bc: BoundarySpec | None = None) -> SemiDiscreteSystem:
    """Assemble ``M_h``, ``K_h`` and the boundary source for ``grid``.

    Rows of ``M_h`` are scaled to sum to one (boundary-column weights
    included); ``K_h`` rows get the same scaling.
    """
    bc = bc if bc is not None else BoundarySpec.zero()
    N, Mr, h = grid.N, grid.M, grid.h
    y = grid.y
    y_ext = grid.y_min + h * np.arange(-1, Mr + 1)

    with np.errstate(all="ignore"):
        A_ext = -np.asarray(coeffs.a_y(y_ext), dtype=float)
        Kop, Fop = compact_stencils(coeffs, y, h)
    bad = ~np.isfinite(A_ext) | (A_ext <= 0)
    if bad.any():
        j = int(np.argmax(bad)) - 1
        raise SolverError(f"assembly: diffusion coefficient not positive/finite at y row {j} (y={y_ext[j + 1]:.6g})")
    if not (np.all(np.isfinite(Kop)) and np.all(np.isfinite(Fop))):
        j = int(np.argmax(~np.isfinite(Kop).all(axis=(1, 2)) | ~np.isfinite(Fop).all(axis=(1, 2))))
        raise SolverError(f"assembly: non-finite coefficient at y row {j} (y={y[j]:.6g})")

    # mass weights act on U_tau / A at the neighbour's row
    Mop = np.empty_like(Fop)
    for dy in (-1, 0, 1):
        Mop[:, :, dy + 1] = Fop[:, :, dy + 1] / A_ext[np.arange(Mr) + dy + 1][:, None]
    scale = Mop.sum(axis=(1, 2))
    Mop /= scale[:, None, None]
    Kop = -Kop / scale[:, None, None]

    ii, jj = np.meshgrid(np.arange(1, N - 1), np.arange(Mr))
    ii = ii.ravel()
    jj = jj.ravel()
    rows_all = grid.index(ii, jj)
    n = grid.n_unknowns

    rows, cols, mv, kv = [], [], [], []
    gk_lo = np.zeros(n)
    gm_lo = np.zeros(n)
    gk_hi = np.zeros(n)
    gm_hi = np.zeros(n)

    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            wm = Mop[jj, dx + 1, dy + 1]
            wk = Kop[jj, dx + 1, dy + 1]
            ti = ii + dx
            tj = jj + dy
            lo = ti == 0
            hi = ti == N - 1
            # Dirichlet columns (ghost rows there share the same y-independent data)
            np.add.at(gk_lo, rows_all[lo], -wk[lo])
            np.add.at(gm_lo, rows_all[lo], wm[lo])
            np.add.at(gk_hi, rows_all[hi], -wk[hi])
            np.add.at(gm_hi, rows_all[hi], wm[hi])
            inner = ~(lo | hi)
            inside = inner & (tj >= 0) & (tj < Mr)
            rows.append(rows_all[inside])
            cols.append(grid.index(ti[inside], tj[inside]))
            mv.append(wm[inside])
            kv.append(wk[inside])
            for edge, base, step in ((tj < 0, 0, 1), (tj >= Mr, Mr - 1, -1)):
                sel = inner & edge
                for k, e in enumerate(EXTRAP):
                    rows.append(rows_all[sel])
                    cols.append(grid.index(ti[sel], np.full(sel.sum(), base + step * k)))
                    mv.append(e * wm[sel])
                    kv.append(e * wk[sel])

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    Mh = sp.csc_matrix((np.concatenate(mv), (rows, cols)), shape=(n, n))
    Kh = sp.csc_matrix((np.concatenate(kv), (rows, cols)), shape=(n, n))
    Mh.sum_duplicates()
    Kh.sum_duplicates()
    return SemiDiscreteSystem(grid, Mh, Kh, bc, gk_lo, gm_lo, gk_hi, gm_hi)


def _bspline3(t):
    t = np.abs(t)
    return np.where(t < 1, 2.0 / 3.0 - t**2 + 0.5 * t**3, np.where(t < 2, (2.0 - t) ** 3 / 6.0, 0.0))


def smoothing_kernel(t):
    """Order-4 smoothing kernel on ``[-3, 3]`` (cubic B-spline with a second-difference correction).

    Its moments of order 1..3 vanish, so cubics pass through unchanged.
    """
    t = np.asarray(t, dtype=float)
    return (4.0 / 3.0) * _bspline3(t) - (_bspline3(t - 1.0) + _bspline3(t + 1.0)) / 6.0


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def smooth_initial(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float,
                   kinks: Sequence[float] = ()) -> np.ndarray:
    """Convolve ``func`` with the order-4 kernel scaled to ``h``, sampled at ``x``.

    ``kinks`` lists points where ``func`` is not smooth; quadrature panels are
    split there so the integral is resolved to rounding.  Points farther than
    ``3h`` from every kink of a piecewise-cubic ``func`` are returned unchanged.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    base = np.arange(-3.0, 4.0)
    for n, xn in enumerate(x):
        cuts = [(xn - k) / h for k in kinks]
        br = np.unique(np.concatenate([base, [c for c in cuts if -3.0 < c < 3.0]]))
        lo, hi = br[:-1], br[1:]
        t = 0.5 * (hi - lo)[:, None] * _GL_NODES[None, :] + 0.5 * (hi + lo)[:, None]
        w = 0.5 * (hi - lo)[:, None] * _GL_WEIGHTS[None, :]
        out[n] = np.sum(w * smoothing_kernel(t) * func(xn - h * t))
    return out


def initial_vector(grid: Grid, p: ModelParams, smoothing: bool = True, payoff=put_payoff) -> np.ndarray:
    """Initial data on the unknowns; the payoff kink sits at x = 0."""
    xi = grid.x[1:-1]
    if smoothing:
        u = smooth_initial(lambda x: initial_condition(x, p, payoff), xi, grid.h, kinks=(0.0,))
    else:
        u = initial_condition(xi, p, payoff)
    return np.tile(u, grid.M)
