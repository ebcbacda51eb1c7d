"""Figure rendering for the command-line report path.

Everything draws through the Agg backend straight to files, so reports work
headless.  Figures are presentation only: the delimited files next to them
are the record, and nothing here feeds back into the computation.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_eulerian",
    "plot_lagrangian",
    "plot_diagnostics",
    "plot_convergence",
    "plot_intervals",
]


def _finish(fig, path):
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_eulerian(z, path, title=None):
    """Velocity on top, energy density below with atoms drawn as stems."""
    fig, (ax_u, ax_mu) = plt.subplots(2, 1, figsize=(7.2, 5.4), sharex=True)
    x = z.grid.nodes
    ax_u.plot(x, z.u, lw=1.2, color="tab:blue")
    ax_u.set_ylabel("u")
    if np.any(z.rho):
        ax_u.plot(x, z.rho, lw=1.0, color="tab:green", alpha=0.7, label="rho")
        ax_u.legend(frameon=False, loc="upper right")
    ax_mu.plot(x, z.mu.density, lw=1.2, color="tab:red")
    ax_mu.set_ylabel("energy density")
    ax_mu.set_xlabel("x")
    for loc, mass in z.mu.atoms:
        ax_mu.annotate(
            "", xy=(loc, mass), xytext=(loc, 0.0),
            arrowprops=dict(arrowstyle="-|>", color="black", lw=1.4),
        )
        ax_mu.plot([loc], [mass], "k^", ms=5)
    if title:
        ax_u.set_title(title)
    fig.tight_layout()
    return _finish(fig, path)


def plot_lagrangian(X, path, title=None):
    """Characteristic positions, velocity, and cumulative energy over xi."""
    fig, axes = plt.subplots(3, 1, figsize=(7.2, 7.0), sharex=True)
    xi = X.grid.nodes
    for ax, field, label, color in zip(
        axes, (X.y, X.U, X.H), ("y", "U", "H"),
        ("tab:blue", "tab:orange", "tab:red"),
    ):
        ax.plot(xi, field, lw=1.2, color=color)
        ax.set_ylabel(label)
    axes[-1].set_xlabel("xi")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    return _finish(fig, path)


def plot_diagnostics(diag, path, title=None):
    """Time traces of the per-step health indicators."""
    fig, axes = plt.subplots(2, 2, figsize=(9.0, 6.0), sharex=True)
    t = diag.column("t")
    panels = [
        ("sup_H", "total energy", False),
        ("min_yxi", "min y_xi", False),
        ("identity_residual", "identity residual", True),
        ("kernel_cancellation", "kernel cancellation", True),
    ]
    for ax, (field, label, logy) in zip(axes.flat, panels):
        vals = diag.column(field)
        if logy:
            ax.semilogy(t, np.maximum(vals, 1e-300), lw=1.1)
        else:
            ax.plot(t, vals, lw=1.1)
        ax.set_title(label, fontsize=10)
    for ax in axes[-1]:
        ax.set_xlabel("t")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _finish(fig, path)


def plot_convergence(dts, errors, path, title=None):
    """Error against step size on log-log axes, with a second-order guide."""
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(dts, errors, "o-", lw=1.2, label="measured")
    guide = errors[0] * (dts / dts[0]) ** 2
    ax.loglog(dts, guide, "--", color="gray", lw=1.0, label="slope 2")
    ax.set_xlabel("dt")
    ax.set_ylabel("error")
    ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _finish(fig, path)


def plot_intervals(labels, lowers, uppers, path, title=None):
    """Certified [lower, upper] intervals, one vertical bar per case."""
    lowers = np.asarray(lowers, dtype=float)
    uppers = np.asarray(uppers, dtype=float)
    idx = np.arange(len(lowers))
    fig, ax = plt.subplots(figsize=(max(4.5, 1.1 * len(idx) + 2.0), 4.5))
    ax.vlines(idx, lowers, uppers, color="tab:blue", lw=3, alpha=0.7)
    ax.plot(idx, lowers, "_", color="black", ms=14, label="lower")
    ax.plot(idx, uppers, "_", color="tab:red", ms=14, label="upper")
    ax.set_xticks(idx)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("distance estimate")
    ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _finish(fig, path)
