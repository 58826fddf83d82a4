"""Diagnostic figures: adaptation factor, time-grid placement, local error."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.0),
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "svhoc",  # stable element ids
    "svg.fonttype": "none",
}


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_figures(report, out_dir, compare=None) -> list[Path]:
    """``xi.svg``, ``grid_points.svg`` and ``local_error.svg`` in ``out_dir``.

    ``compare`` is an optional second report (equidistant steps) drawn dashed
    on the local-error panel.
    """
    out = Path(out_dir)
    paths = [out / "xi.svg", out / "grid_points.svg", out / "local_error.svg"]
    tau_steps = report.tau[report.step_index]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(tau_steps, report.xi, "-", color="tab:green")
        ax.set_xscale("log")
        ax.set_xlabel(r"$\tau_n$")
        ax.set_ylabel(r"$\xi_n$")
        _save(fig, paths[0])

        fig, ax = plt.subplots(figsize=(5.0, 1.4))
        ax.plot(report.tau, [0.0] * len(report.tau), "|", color="k", markersize=12)
        ax.set_yticks([])
        ax.set_xlabel(r"$\tau$")
        ax.set_title(f"{len(report.tau)} time points", fontsize=8)
        _save(fig, paths[1])

        fig, ax = plt.subplots()
        ax.semilogy(tau_steps, report.eps_norm, "-", color="tab:green", label="adaptive")
        if compare is not None:
            ax.semilogy(compare.tau[compare.step_index], compare.eps_norm, "--", color="tab:blue",
                        label="equidistant")
        ax.axhline(report.epsilon_hat, linestyle=":", color="tab:red", label=r"$\hat\epsilon$")
        ax.set_xlabel(r"$\tau_n$")
        ax.set_ylabel(r"$\|\epsilon_n\|_2$")
        ax.legend(frameon=False)
        _save(fig, paths[2])
    return paths
