"""Persistence of run reports: delimited text, figures and a manifest."""

from __future__ import annotations

import math
import platform
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from svhoc.errors import PricingError
from svhoc.model import inverse_transform

FMT = "%.17g"


class ReportIOError(PricingError, OSError):
    exit_code = 4


@dataclass(frozen=True)
class GridSummary:
    total: int
    counts: tuple[int, int, int]
    bounds: tuple[float, float, float]

    @property
    def fractions(self) -> tuple[float, float, float]:
        return tuple(c / self.total for c in self.counts)

    def rows(self):
        lo = 0.0
        for c, hi, f in zip(self.counts, self.bounds, self.fractions):
            yield lo, hi, c, f
            lo = hi


def summarize_grid(tau, T: float | None = None) -> GridSummary:
    """Points in ``[0, T/200]``, ``(T/200, T/2]`` and ``(T/2, T]``.

    For ``T = 2`` these are ``[0, 0.01]``, ``(0.01, 1]`` and ``(1, 2]``.
    """
    tau = np.asarray(getattr(tau, "tau", tau), dtype=float)
    T = float(tau[-1]) if T is None else T
    b = (0.005 * T, 0.5 * T, T)
    # relative slack so that tau_n computed as T/200 by accumulation stays in the first bin
    eps = 1e-12 * T
    c0 = int(np.sum(tau <= b[0] + eps))
    c1 = int(np.sum((tau > b[0] + eps) & (tau <= b[1] + eps)))
    c2 = int(np.sum(tau > b[1] + eps))
    return GridSummary(len(tau), (c0, c1, c2), b)


def _write(path: Path, header: str, columns, fmt) -> None:
    try:
        np.savetxt(path, np.column_stack(columns), fmt=fmt, delimiter=",", header=header, comments="")
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def write_report(report, out_dir, config_echo: dict | None = None, versions: dict | None = None,
                 compare=None) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportIOError(f"cannot create output directory {out}: {exc}") from exc

    n = np.arange(len(report.tau))
    _write(out / "time_grid.csv", "n,tau_n,k_n", [n, report.tau, report.k], ["%d", FMT, FMT])
    _write(out / "xi.csv", "n,xi_n", [report.step_index, report.xi], ["%d", FMT])
    _write(out / "local_error.csv", "n,eps_norm", [report.step_index, report.eps_norm], ["%d", FMT])

    g = report.grid
    X, Y = np.meshgrid(g.x, g.y)
    u = report.surface()
    p = report.params
    if p is not None:
        S, v = inverse_transform(X, Y, p)
        V = p.strike * math.exp(-p.r * float(report.tau[-1])) * u
    else:
        S = v = V = np.full_like(u, np.nan)
    _write(out / "surface.csv", "x,y,S,v,u,V", [a.ravel() for a in (X, Y, S, v, u, V)], FMT)
    prices = np.array(report.prices, dtype=float).reshape(-1, 3)
    _write(out / "prices.csv", "S,v,V", [prices[:, 0], prices[:, 1], prices[:, 2]], FMT)

    from svhoc import plotting

    try:
        plotting.write_figures(report, out, compare=compare)
    except OSError as exc:
        raise ReportIOError(f"cannot write figures to {out}: {exc}") from exc
    write_manifest(report, out, config_echo or {}, versions or default_versions())
    return out


def default_versions() -> dict:
    import matplotlib
    import scipy

    from svhoc import __version__

    return {
        "svhoc": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
    }


def write_manifest(report, out: Path, config_echo: dict, versions: dict) -> None:
    s = summarize_grid(report.tau)
    lines = ["[config]"]
    lines += [f"{k} = {v}" for k, v in config_echo.items()]
    lines += ["", "[versions]"] + [f"{k} = {v}" for k, v in versions.items()]
    lines += ["", "[timings_seconds]"] + [f"{k} = {v:.6f}" for k, v in report.timings.items()]
    lines += ["", "[run]",
              f"mode = {report.mode}",
              f"grid = N={report.grid.N} M={report.grid.M} h={report.grid.h:.17g}",
              f"time_points = {len(report.tau)}",
              f"factorizations = {report.factorizations}",
              f"threshold_exceeded = {int(np.sum(report.eps_norm > report.epsilon_hat))}"]
    for lo, hi, c, f in s.rows():
        lines.append(f"points_in_({lo:g},{hi:g}] = {c} ({f:.3f})")
    try:
        (out / "manifest.txt").write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise ReportIOError(f"cannot write manifest: {exc}") from exc


def read_series(path) -> dict[str, np.ndarray]:
    """Read one of the report CSV files into ``{column: array}``."""
    path = Path(path)
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}") from exc
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name]) for name in data.dtype.names}
