"""PNG figures for the ``report`` command (matplotlib, non-interactive backend).

Each function takes plain arrays and a destination path and returns the path.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_energy", "plot_gap_curves", "plot_g_functionals", "plot_distances"]


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_energy(runs: dict, path) -> Path:
    """Ensemble-max L2 norm squared against the L2 bound, one panel line per omega.

    ``runs`` maps omega to a dict with ``time``, ``l2_sq_max`` and ``l2_bound``.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for om, r in sorted(runs.items()):
        line, = ax.plot(r["time"], r["l2_sq_max"], label=f"omega={om:g}")
        ax.plot(r["time"], r["l2_bound"], ls="--", color=line.get_color(), lw=0.8)
    ax.set_xlabel("t - s")
    ax.set_ylabel("max ||u||^2 (dashed: bound)")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_gap_curves(curves: dict, path) -> Path:
    """Log-log gap curves; ``curves`` maps a label to ``(omegas, gaps)``."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, (om, gap) in curves.items():
        gap = np.asarray(gap, dtype=float)
        ax.loglog(om, np.where(gap > 0, gap, np.nan), marker="o", label=label)
    ax.set_xlabel("omega")
    ax.set_ylabel("H1 gap")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_g_functionals(omegas, sups: dict, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for j, s in sorted(sups.items()):
        ax.loglog(omegas, s, marker="o", label=f"G{j}")
    ax.loglog(omegas, np.asarray(sups[min(sups)])[0] * omegas[0] / np.asarray(omegas),
              ls=":", color="grey", label="1/omega")
    ax.set_xlabel("omega")
    ax.set_ylabel("sup_t ||G||_H1")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_distances(omegas, distance, eps, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.semilogx(omegas, distance, marker="o", label="d(A_omega, A)")
    ax.semilogx(omegas, eps, marker="s", ls="--", label="cloud resolution")
    ax.set_xlabel("omega")
    ax.set_ylabel("H1 semidistance")
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=8)
    return _save(fig, path)
