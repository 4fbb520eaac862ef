"""Aggregate the per-stage JSON files of an output directory into one summary.

Every stage of the CLI writes ``<stage>.json`` at the top of the output
directory.  ``build_summary`` collects whichever exist, marks the rest as
missing, and ``render_figures`` draws what the available tables allow.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tables import read_table

__all__ = ["STAGES", "build_summary", "render_figures", "write_summary"]

STAGES = ("validate", "simulate", "verify-bounds", "averaging", "attractor", "acceptance")


def _load(path: Path):
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return None


def build_summary(out: Path) -> dict:
    out = Path(out)
    sections, missing = {}, []
    for stage in STAGES:
        data = _load(out / f"{stage}.json")
        if data is None:
            sections[stage] = {"status": "missing"}
            missing.append(stage)
        else:
            sections[stage] = data
    verdicts = [s["passed"] for s in sections.values() if isinstance(s.get("passed"), bool)]
    return {
        "output_dir": str(out),
        "sections": sections,
        "missing": missing,
        "all_present_passed": bool(all(verdicts)) if verdicts else None,
    }


def render_figures(out: Path) -> list:
    """Draw every figure whose source tables exist; returns the written paths."""
    from . import plotting

    out = Path(out)
    fig_dir = out / "figures"
    written = []

    runs = {}
    for path in sorted((out / "simulate").glob("omega_*.tsv")):
        meta, cols = read_table(path)
        runs[float(meta["omega"])] = {k: cols[k] for k in ("time", "l2_sq_max", "l2_bound")}
    if runs:
        written.append(plotting.plot_energy(runs, fig_dir / "energy.png"))

    curves = {}
    for name in ("linear_gap", "initial_layer", "trajectory_gap", "trajectory_gap_delta0"):
        path = out / "averaging" / f"{name}.tsv"
        if path.exists():
            _, cols = read_table(path)
            curves[name] = (cols["omega"], cols["gap"])
    if curves:
        written.append(plotting.plot_gap_curves(curves, fig_dir / "gap_curves.png"))

    path = out / "averaging" / "g_functionals.tsv"
    if path.exists():
        _, cols = read_table(path)
        sups = {j: cols[f"G{j}_sup"] for j in (1, 2, 3)}
        written.append(plotting.plot_g_functionals(cols["omega"], sups,
                                                   fig_dir / "g_functionals.png"))

    path = out / "attractor" / "distances.tsv"
    if path.exists():
        _, cols = read_table(path)
        written.append(plotting.plot_distances(cols["omega"], cols["distance"],
                                               cols["eps_cloud"], fig_dir / "distances.png"))
    return written


def write_summary(out: Path, figures: bool = True) -> dict:
    out = Path(out)
    summary = build_summary(out)
    summary["figures"] = [str(p.relative_to(out)) for p in render_figures(out)] if figures else []
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default))
    return summary


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serialisable: {type(v).__name__}")
