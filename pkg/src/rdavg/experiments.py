"""Experiment drivers shared by the CLI and the acceptance suite.

Every driver is a pure function of an ``ExperimentConfig`` (plus explicit
arguments); randomness comes only from ``numpy.random.default_rng(seed)``.
Independent omega values can be farmed out to a process pool; results are
merged in omega order, so output does not depend on ``jobs``.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attractor import CloudParams, USCResult, upper_semicontinuity_experiment
from .averaging import (GapCurve, g3_by_parts, g_functionals, initial_layer_curve,
                        linear_gap_curve, nemitski_average_check, trajectory_gap_curve)
from .config import ExperimentConfig
from .dynamics import evolve_batch
from .estimates import (absorbing_constants, absorbing_time, energy_rate_excess, grad_bound,
                        l2_bound, tail_time)
from .spectral import random_field

__all__ = [
    "initial_ensemble",
    "DissipativeRun",
    "dissipative_run",
    "dissipative_runs",
    "check_bounds",
    "linear_experiment",
    "g_experiment",
    "trajectory_experiment",
    "attractor_experiment",
    "parallel_map",
]


def parallel_map(fn, items, jobs: int = 1) -> list:
    """Order-preserving map, optionally over a process pool."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def initial_ensemble(cfg: ExperimentConfig, seeds=None, radius=None, smoothness=None) -> list:
    """Random localised data with L2 norm in [R/4, R], one per seed."""
    sw = cfg.raw["sweeps"]
    seeds = cfg.seeds if seeds is None else list(seeds)
    R = sw["ensemble_radius"] if radius is None else radius
    sm = sw["smoothness"] if smoothness is None else smoothness
    out = []
    for s in seeds:
        rng = np.random.default_rng(s)
        norm = R * rng.uniform(0.25, 1.0)
        out.append(random_field(cfg.grid, rng, l2_norm=norm, smoothness=sm))
    return out


@dataclass(eq=False)
class DissipativeRun:
    omega: float
    times: np.ndarray
    seeds: np.ndarray
    offsets: np.ndarray
    l2_sq: np.ndarray
    grad_sq: np.ndarray
    tail: np.ndarray
    tol_l2: float
    tol_grad: float
    tol_rate: float
    tail_time: float
    step: float
    meta: dict = field(default_factory=dict)

    _ARRAYS = ("times", "seeds", "offsets", "l2_sq", "grad_sq", "tail")
    _SCALARS = ("omega", "tol_l2", "tol_grad", "tol_rate", "tail_time", "step")

    def save(self, path) -> Path:
        """Compressed ``.npz`` holding every array plus a JSON blob of scalars."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        scalars = {k: float(getattr(self, k)) for k in self._SCALARS}
        blob = json.dumps({"scalars": scalars, "meta": self.meta}, default=float)
        np.savez_compressed(path, header=np.array(blob),
                            **{k: getattr(self, k) for k in self._ARRAYS})
        return path

    @classmethod
    def load(cls, path) -> "DissipativeRun":
        with np.load(path, allow_pickle=False) as z:
            head = json.loads(str(z["header"]))
            arrays = {k: z[k] for k in cls._ARRAYS}
        return cls(**arrays, **head["scalars"], meta=head["meta"])


def _scheme_tolerance(p, scheme, fields, offsets, horizon, factor):
    """factor * max |diagnostic(h) - diagnostic(h/2)| over a short horizon."""
    h = scheme.step_size(p)
    n = int(np.ceil(horizon / h - 1e-9))
    h = horizon / n
    coarse = evolve_batch(p, scheme, 0.0, horizon, fields, offsets, sample_every=1, step=h)
    fine = evolve_batch(p, scheme, 0.0, horizon, fields, offsets, sample_every=2, step=h / 2)
    dl2 = np.abs(coarse.l2_sq - fine.l2_sq).max()
    dgr = np.abs(coarse.grad_sq - fine.grad_sq).max()
    rc = np.diff(coarse.l2_sq, axis=1) / h
    rf = np.diff(fine.l2_sq, axis=1) / h
    drate = np.abs(rc - rf).max()
    return factor * dl2, factor * dgr, factor * drate


def dissipative_run(cfg: ExperimentConfig, omega: float, t_end: float | None = None,
                    sample_every: int = 4) -> DissipativeRun:
    """Ensemble x hull-shift batch for one omega, long enough for the tail check."""
    p = cfg.problem.with_omega(omega)
    v = cfg.verification
    fields = initial_ensemble(cfg)
    shifts = cfg.hull_shifts
    init = [f for f in fields for _ in shifts]
    offsets = np.tile(shifts, len(fields))
    seeds = np.repeat(cfg.seeds, len(shifts))
    R = max(f.h1() for f in fields)
    T_bar = tail_time(p, R, v["tail_eta"])
    t_end = T_bar + 2.0 if t_end is None else t_end
    run = evolve_batch(p, cfg.scheme, 0.0, t_end, init, offsets, sample_every=sample_every,
                       tail_radius=v["tail_radius"])
    # scheme tolerance on the early, fastest-varying part of the run
    k = min(10, len(init))
    tol = _scheme_tolerance(p, cfg.scheme, init[:k], offsets[:k], min(2.0, t_end),
                            v["scheme_tolerance_factor"])
    return DissipativeRun(
        omega=float(omega), times=run.times, seeds=seeds, offsets=offsets,
        l2_sq=run.l2_sq, grad_sq=run.grad_sq, tail=run.tail,
        tol_l2=tol[0], tol_grad=tol[1], tol_rate=tol[2], tail_time=T_bar, step=run.step,
        meta={"R": R, **absorbing_constants(p), "T_R": absorbing_time(p, R)},
    )


def dissipative_runs(cfg: ExperimentConfig, omegas=None, jobs: int = 1, **kw) -> list:
    omegas = cfg.omegas if omegas is None else omegas
    return parallel_map(_DissipativeJob(cfg.raw, kw), omegas, jobs)


class _DissipativeJob:
    def __init__(self, raw, kw):
        self.raw, self.kw = raw, kw

    def __call__(self, omega):
        return dissipative_run(ExperimentConfig(self.raw), omega, **self.kw)


def check_bounds(cfg: ExperimentConfig, run: DissipativeRun) -> dict:
    """Violation counts and worst margins of every dissipative estimate."""
    p = cfg.problem.with_omega(run.omega)
    v = cfg.verification
    tau = run.times - run.times[0]
    l20, gr0 = run.l2_sq[:, :1], run.grad_sq[:, :1]
    L2b = l2_bound(p, l20, tau) + run.tol_l2
    Gb = grad_bound(p, l20, gr0, tau) + run.tol_grad
    h1 = np.sqrt(run.l2_sq + run.grad_sq)
    K = run.meta["K"]
    R_each = np.sqrt(l20 + gr0)[:, 0]
    T_each = np.array([absorbing_time(p, R) for R in R_each])
    after_T = tau[None, :] >= T_each[:, None]
    late = tau >= run.tail_time
    tail_ratio = run.tail[:, late] / run.l2_sq[:, late] if late.any() else np.zeros((1, 0))
    rate = energy_rate_excess(p, run.times, run.l2_sq)
    out = {
        "omega": run.omega,
        "samples": int(run.l2_sq.size),
        "l2_violations": int(np.sum(run.l2_sq > L2b)),
        "l2_worst_ratio": float(np.max(run.l2_sq / L2b)),
        "h1_violations": int(np.sum(run.grad_sq > Gb)),
        "h1_worst_ratio": float(np.max(run.grad_sq / Gb)),
        "absorbing_violations": int(np.sum((h1 >= K) & after_T)),
        "absorbing_max_h1": float(np.max(np.where(after_T, h1, 0.0))),
        "K": K,
        "tail_violations": int(np.sum(tail_ratio > v["tail_eta"])),
        "tail_worst_ratio": float(tail_ratio.max()) if tail_ratio.size else 0.0,
        "tail_samples": int(tail_ratio.size),
        "tail_time": run.tail_time,
        "energy_violations": int(np.sum(rate > run.tol_rate)),
        "energy_worst_excess": float(rate.max()),
        "tol_l2": run.tol_l2,
        "tol_grad": run.tol_grad,
        "tol_rate": run.tol_rate,
    }
    out["violations"] = (out["l2_violations"] + out["h1_violations"] + out["absorbing_violations"]
                         + out["tail_violations"] + out["energy_violations"])
    return out


# averaging -----------------------------------------------------------------

def linear_experiment(cfg: ExperimentConfig, seed: int = 0) -> tuple[GapCurve, GapCurve]:
    """Linear gap curve for a smooth datum and the initial-layer curve for a rough one."""
    v = cfg.verification
    rng = np.random.default_rng(seed)
    smooth = random_field(cfg.grid, rng, l2_norm=1.0, smoothness=cfg.raw["sweeps"]["smoothness"])
    rough = random_field(cfg.grid, np.random.default_rng(seed + 1), l2_norm=1.0,
                         smoothness=0.6, envelope_width=None)
    om = v["linear_omegas"]
    gap = linear_gap_curve(cfg.problem, smooth, 0.0, v["delta"], v["T"], om)
    layer = initial_layer_curve(cfg.problem, rough, 0.0, om)
    return gap, layer


@dataclass(eq=False)
class GExperiment:
    omegas: np.ndarray
    sups: dict                   # j -> array over omegas
    by_parts: list               # per omega: dict from g3_by_parts
    nemitski_ratio: float

    def ratios(self, j: int) -> np.ndarray:
        s = self.sups[j]
        return s[1:] / s[:-1]


def g_experiment(cfg: ExperimentConfig, seed: int = 0) -> GExperiment:
    v = cfg.verification
    u = random_field(cfg.grid, np.random.default_rng(seed), l2_norm=1.0,
                     smoothness=cfg.raw["sweeps"]["smoothness"])
    om = np.asarray(v["g_omegas"], dtype=float)
    sups = {1: [], 2: [], 3: []}
    parts, nem = [], 0.0
    for w in om:
        G = g_functionals(cfg.problem, w, 0.0, v["T"], u)
        for j in sups:
            sups[j].append(G.sup(j))
        parts.append(g3_by_parts(cfg.problem, w, 0.0, 0.5 * v["T"] + 0.123))
        nem = max(nem, nemitski_average_check(cfg.problem, u, w)["max_ratio"])
    return GExperiment(om, {j: np.array(s) for j, s in sups.items()}, parts, nem)


def trajectory_experiment(cfg: ExperimentConfig, n_data: int = 4, n_shifts: int = 4,
                          ) -> tuple[GapCurve, GapCurve]:
    """Nonlinear gap curve (ensemble x hull shifts) and the delta = 0 variant."""
    v = cfg.verification
    data = initial_ensemble(cfg, seeds=range(n_data), radius=2.0)
    shifts = 2 * np.pi * np.arange(n_shifts) / n_shifts
    om = v["trajectory_omegas"]
    gap = trajectory_gap_curve(cfg.problem, data, 0.0, v["delta"], v["T"], om, shifts, cfg.scheme)
    zero = trajectory_gap_curve(cfg.problem, data[:1], 0.0, 0.0, v["T"], om, [0.0], cfg.scheme)
    return gap, zero


def attractor_experiment(cfg: ExperimentConfig, omegas=None, problem=None,
                         keep_clouds: bool = False) -> USCResult:
    a = cfg.attractor
    v = cfg.verification
    params = CloudParams(transient=a["transient"], window=a["window"],
                         sample_spacing=a["sample_spacing"], tail_radius=v["tail_radius"],
                         tail_eta=v["tail_eta"])
    ens = initial_ensemble(cfg, seeds=range(a["ensemble"]), radius=2.0)
    om = a["omegas"] if omegas is None else omegas
    return upper_semicontinuity_experiment(problem or cfg.problem, om, cfg.attractor_shifts(),
                                           ens, params, cfg.scheme, keep_clouds=keep_clouds)
