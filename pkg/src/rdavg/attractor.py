"""Point-cloud approximations of uniform and averaged attractors.

A cloud is the set of late-time samples of many trajectories, started from
an ensemble of initial data at a grid of hull translates.  Clouds are stored
in the compact de-aliased layout; distances are H1 distances computed through
an isometric real embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .coefficients import ProblemSpec
from .dynamics import SchemeConfig, SpectralLayout, evolve_batch, write_snapshots
from .errors import ConfigurationError, DiagnosticError
from .estimates import absorbing_constants, absorbing_time
from .tables import write_table

__all__ = [
    "CloudParams",
    "AttractorCloud",
    "build_cloud",
    "h1_embedding",
    "hausdorff_semidist",
    "USCResult",
    "upper_semicontinuity_experiment",
]


@dataclass(frozen=True)
class CloudParams:
    """Run parameters shared by every cloud of one experiment."""

    transient: float = 20.0
    window: float = 2 * np.pi
    sample_spacing: float = 0.2
    tail_radius: float = 10.0
    tail_eta: float = 1e-6
    tail_floor: float = 1e-12
    drift_tol: float = 0.05
    drift_floor: float = 1e-6     # H1 scale below which drift is measured absolutely

    def __post_init__(self):
        if not self.transient >= 0 or not self.window > 0 or not self.sample_spacing > 0:
            raise ConfigurationError("transient >= 0, window > 0 and sample_spacing > 0 required")
        if not self.sample_spacing <= self.window:
            raise ConfigurationError("sample_spacing must not exceed the window")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(eq=False)
class AttractorCloud:
    layout: SpectralLayout = field(repr=False)
    coeffs: np.ndarray = field(repr=False)    # (n, *layout.shape)
    omega: np.ndarray = field(repr=False)     # inf marks the averaged system
    hull_shift: np.ndarray = field(repr=False)
    seed: np.ndarray = field(repr=False)
    time: np.ndarray = field(repr=False)
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.coeffs)
        if n == 0:
            raise ConfigurationError("empty cloud")
        for name in ("omega", "hull_shift", "seed", "time"):
            arr = np.broadcast_to(np.asarray(getattr(self, name)), (n,)).copy()
            setattr(self, name, arr)

    def __len__(self):
        return len(self.coeffs)

    @property
    def grid(self):
        return self.layout.grid

    @property
    def points(self) -> list:
        return [self.layout.unpack(c) for c in self.coeffs]

    def h1_norms(self) -> np.ndarray:
        return np.sqrt(self.layout.l2_sq(self.coeffs) + self.layout.grad_sq(self.coeffs))

    def subset(self, mask) -> "AttractorCloud":
        mask = np.asarray(mask)
        return AttractorCloud(self.layout, self.coeffs[mask], self.omega[mask],
                              self.hull_shift[mask], self.seed[mask], self.time[mask],
                              dict(self.params), {})

    def union(self, other: "AttractorCloud") -> "AttractorCloud":
        _same_grid(self, other)
        cat = np.concatenate
        return AttractorCloud(self.layout, cat([self.coeffs, other.coeffs]),
                              cat([self.omega, other.omega]), cat([self.hull_shift, other.hull_shift]),
                              cat([self.seed, other.seed]), cat([self.time, other.time]),
                              dict(self.params), {})

    @classmethod
    def from_fields(cls, fields, **provenance) -> "AttractorCloud":
        fields = list(fields)
        if not fields:
            raise ConfigurationError("empty cloud")
        lay = SpectralLayout(fields[0].grid)
        prov = {k: provenance.get(k, np.nan) for k in ("omega", "hull_shift", "seed", "time")}
        return cls(lay, lay.pack(fields), **prov)

    def write_manifest(self, directory, stem: str) -> tuple[Path, Path]:
        """Text index of provenance plus binary snapshots of every point."""
        directory = Path(directory)
        index = write_table(
            directory / f"{stem}_index.tsv",
            {"point": np.arange(len(self)), "omega": self.omega, "hull_shift": self.hull_shift,
             "seed": self.seed, "time": self.time, "h1_norm": self.h1_norms()},
            {"params": self.params, "diagnostics": self.diagnostics},
        )
        snaps = write_snapshots(directory / f"{stem}_points.bin", self.grid, self.time, self.points)
        return index, snaps


def _same_grid(a: AttractorCloud, b: AttractorCloud):
    if a.layout.shape != b.layout.shape or a.grid.half_width != b.grid.half_width:
        raise ConfigurationError("clouds live on different grids")


def h1_embedding(cloud: AttractorCloud) -> np.ndarray:
    """Real vectors whose Euclidean distances equal H1 distances of the points."""
    lay = cloud.layout
    scale = np.sqrt(lay.grid.volume * lay.weights * (1.0 + lay.xi2)).ravel()
    c = cloud.coeffs.reshape(len(cloud), -1) * scale
    return np.concatenate([c.real, c.imag], axis=1)


def hausdorff_semidist(X: AttractorCloud, Y: AttractorCloud) -> float:
    """max over x in X of min over y in Y of ||x - y||_H1 (not symmetric)."""
    _same_grid(X, Y)
    ex, ey = h1_embedding(X), h1_embedding(Y)
    k = min(4, len(ey))
    _, idx = cKDTree(ey).query(ex, k=k)
    idx = np.asarray(idx).reshape(len(ex), k)
    # recompute the candidate distances exactly; the tree only proposes neighbours
    d = np.sqrt(np.sum((ex[:, None, :] - ey[idx]) ** 2, axis=-1))
    return float(np.max(np.min(d, axis=1)))


def build_cloud(p_base: ProblemSpec, omega: float | None, hull_shifts, ensemble,
                params: CloudParams = CloudParams(), scheme: SchemeConfig | None = None,
                seeds=None, extra_time: float = 0.0) -> AttractorCloud:
    """Late-time samples over ``hull_shifts`` x ``ensemble``.

    ``omega=None`` uses the averaged (autonomous) system, for which hull
    shifts are immaterial and only the first is used.  The run covers
    ``[0, transient + window + extra_time]`` and records samples from
    ``transient`` on; ``extra_time > 0`` is used by the near-invariance check.
    """
    scheme = scheme or SchemeConfig()
    fields = list(ensemble)
    if not fields:
        raise ConfigurationError("empty ensemble")
    seeds = np.arange(len(fields)) if seeds is None else np.asarray(seeds)
    if omega is None:
        p = p_base.averaged()
        shifts = np.zeros(1)
        om_label = np.inf
    else:
        p = p_base.with_omega(omega)
        shifts = np.atleast_1d(np.asarray(hull_shifts, dtype=float))
        om_label = float(omega)
    R = max(f.h1() for f in fields)
    T_R = absorbing_time(p, R)
    if params.transient < 2 * T_R:
        raise ConfigurationError(
            f"transient {params.transient} is shorter than 2 T(R) = {2 * T_R:.4g} for R = {R:.4g}"
        )
    h = scheme.step_size(p)
    stride = max(1, int(np.ceil(params.sample_spacing / h - 1e-9)))
    h = params.sample_spacing / stride
    t_end = params.transient + params.window + extra_time
    initial = [f for f in fields for _ in shifts]
    offsets = np.tile(shifts, len(fields))
    run = evolve_batch(p, scheme, 0.0, t_end, initial, offsets, sample_every=stride,
                       record_after=params.transient - 1e-9, keep_states=True,
                       tail_radius=params.tail_radius, step=h)
    n_members, n_times = run.states.shape[:2]
    coeffs = run.states.reshape((n_members * n_times,) + run.layout.shape)
    member = np.repeat(np.arange(n_members), n_times)
    cloud = AttractorCloud(
        run.layout, coeffs,
        omega=om_label,
        hull_shift=offsets[member],
        seed=np.repeat(seeds, len(shifts))[member],
        time=np.tile(run.times, n_members),
        params=dict(params.to_dict(), step=run.step, ensemble=len(fields),
                    hull_shifts=shifts.tolist()),
    )
    _check_cloud(p, cloud, run, params, len(shifts))
    return cloud


def _check_cloud(p: ProblemSpec, cloud: AttractorCloud, run, params: CloudParams, n_shifts: int):
    K = absorbing_constants(p)["K"]
    h1 = cloud.h1_norms()
    l2_sq = run.l2_sq.reshape(-1)
    tail = run.tail.reshape(-1)
    tail_ok = tail <= params.tail_eta * l2_sq + params.tail_floor
    # drift: peak H1 norm over the two halves of the window, per initial datum;
    # the union over hull shifts covers all phases, so sampling does not alias
    norms = np.sqrt(run.h1_sq)
    norms = norms.reshape(-1, n_shifts, norms.shape[1]).max(axis=1)
    half = norms.shape[1] // 2
    peak = np.max(norms, axis=1)
    first, second = np.max(norms[:, : max(half, 1)], axis=1), np.max(norms[:, half:], axis=1)
    drift = np.abs(second - first) / np.maximum(peak, params.drift_floor)
    cloud.diagnostics = {
        "absorbing_radius": K,
        "max_h1": float(h1.max()),
        "inside_absorbing_ball": bool(np.all(h1 < K)),
        "tail_ok": bool(np.all(tail_ok)),
        "max_tail_ratio": float(np.max(tail / np.maximum(l2_sq, 1e-300))),
        "drift": float(drift.max()),
    }
    if not cloud.diagnostics["inside_absorbing_ball"]:
        raise DiagnosticError(f"cloud point outside the absorbing ball: {h1.max():.4g} >= K = {K:.4g}")
    if not cloud.diagnostics["tail_ok"]:
        raise DiagnosticError("cloud point violates the tail bound")
    if drift.max() > params.drift_tol:
        raise DiagnosticError(f"transient not converged: H1 drift {drift.max():.3g} "
                              f"> {params.drift_tol}")


@dataclass(eq=False)
class USCResult:
    omegas: np.ndarray
    distance: np.ndarray          # d(A_omega, A)
    reverse: np.ndarray           # d(A, A_omega), recorded only
    eps_cloud: np.ndarray
    drift: np.ndarray
    stability: np.ndarray
    clouds: dict = field(repr=False, default_factory=dict)

    def nonincreasing(self, band: float) -> bool:
        d = self.distance
        return bool(np.all(d[1:] <= (1.0 + band) * d[:-1]))

    def to_table(self) -> dict:
        return {"omega": self.omegas, "distance": self.distance, "reverse": self.reverse,
                "eps_cloud": self.eps_cloud, "drift": self.drift, "stability": self.stability}


def _cloud_pair(p_base, omega, shifts, ensemble, params, scheme, seeds):
    """Cloud on [T, T+W] plus the cloud of the same runs one time unit later."""
    full = build_cloud(p_base, omega, shifts, ensemble, params, scheme, seeds, extra_time=1.0)
    t0 = params.transient
    early = full.subset(full.time <= t0 + params.window + 1e-9)
    late = full.subset(full.time >= t0 + 1.0 - 1e-9)
    early.diagnostics = full.diagnostics
    return early, late


def upper_semicontinuity_experiment(p_base: ProblemSpec, omegas, hull_shifts, ensemble,
                                    params: CloudParams = CloudParams(),
                                    scheme: SchemeConfig | None = None,
                                    keep_clouds: bool = False) -> USCResult:
    """d_H1(A_omega, A) per omega with its cloud resolution.

    ``eps_cloud`` is the larger of the near-invariance drift (the symmetric
    semidistance between a cloud and the same runs advanced by one time unit,
    for both clouds involved) and the sampling-stability delta (change of
    d(A_omega, A) when half of the ensemble is dropped).
    """
    omegas = np.asarray(omegas, dtype=float)
    if np.any(np.diff(omegas) <= 0):
        raise ConfigurationError("omega list must be increasing")
    ensemble = list(ensemble)
    seeds = np.arange(len(ensemble))
    half = seeds < max(1, len(ensemble) // 2)
    A, A_late = _cloud_pair(p_base, None, [0.0], ensemble, params, scheme, seeds)
    drift_A = max(hausdorff_semidist(A_late, A), hausdorff_semidist(A, A_late))
    A_half = A.subset(half[A.seed.astype(int)])
    out = {k: [] for k in ("d", "rev", "eps", "drift", "stab")}
    clouds = {"averaged": A}
    for om in omegas:
        C, C_late = _cloud_pair(p_base, om, hull_shifts, ensemble, params, scheme, seeds)
        d = hausdorff_semidist(C, A)
        drift = max(hausdorff_semidist(C_late, C), hausdorff_semidist(C, C_late), drift_A)
        C_half = C.subset(half[C.seed.astype(int)])
        stab = abs(hausdorff_semidist(C_half, A_half) - d)
        out["d"].append(d)
        out["rev"].append(hausdorff_semidist(A, C))
        out["drift"].append(drift)
        out["stab"].append(stab)
        out["eps"].append(max(drift, stab))
        if keep_clouds:
            clouds[float(om)] = C
    arr = {k: np.array(v) for k, v in out.items()}
    return USCResult(omegas, arr["d"], arr["rev"], arr["eps"], arr["drift"], arr["stab"],
                     clouds if keep_clouds else {"averaged": A})
