"""Exponential time stepping of the semilinear problem in Fourier space.

The linear part (principal part plus ``a0``) is diagonal, so its exact
propagator ``exp(-E_k(s, t) - int_s^t a0)`` is applied in closed form; only
``f + g`` is treated explicitly.  The state lives on the de-aliased modes
``|k_i| <= K``; the cubic is evaluated on a zero-padded grid with more than
``4K`` points per axis, which makes the projected product exact.

Internally coefficients are stored without the origin phase, in half-spectrum
(``rfft``) layout: shape ``(K+1,)`` in one dimension and ``(2K+1, K+1)`` in
two, with a leading batch axis.  Batches run several initial data and/or hull
offsets in lockstep; each member ``b`` evaluates coefficients at
``omega * t + offsets[b]``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .coefficients import ProblemSpec
from .errors import BlowUpError, ConfigurationError, DomainError
from .spectral import GridSpec, SpectralField
from .tables import write_table

__all__ = [
    "SchemeConfig",
    "SpectralLayout",
    "Integrator",
    "BatchTrajectory",
    "Trajectory",
    "nemitski",
    "step",
    "evolve",
    "evolve_batch",
    "phi1",
    "phi2",
    "write_snapshots",
    "read_snapshots",
]


@dataclass(frozen=True)
class SchemeConfig:
    """Step-size policy and scheme order.

    The step is ``min(base_step, c_osc / (omega * nu_max))`` so every
    coefficient period is resolved by at least ``2 pi / c_osc`` steps.
    """

    base_step: float = 0.01
    c_osc: float = 0.2
    order: int = 2
    dealias_fraction: float | None = None

    def __post_init__(self):
        if not self.base_step > 0:
            raise ConfigurationError(f"base_step must be positive, got {self.base_step}")
        if not 0 < self.c_osc <= 1:
            raise ConfigurationError(f"c_osc must lie in (0, 1], got {self.c_osc}")
        if self.order not in (1, 2):
            raise ConfigurationError(f"order must be 1 or 2, got {self.order}")
        if self.dealias_fraction is not None and not 0 < self.dealias_fraction <= 1:
            raise ConfigurationError("dealias_fraction must lie in (0, 1]")

    def step_size(self, p: ProblemSpec) -> float:
        nu = p.max_frequency
        if nu == 0:
            return self.base_step
        return min(self.base_step, self.c_osc / (p.omega * nu))

    def grid_for(self, grid: GridSpec) -> GridSpec:
        if self.dealias_fraction is None:
            return grid
        return replace(grid, dealias_fraction=self.dealias_fraction)

    def to_dict(self) -> dict:
        return {"base_step": self.base_step, "c_osc": self.c_osc, "order": self.order,
                "dealias_fraction": self.dealias_fraction}


def phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1) / z, continuous at 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-5
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2 + z * z / 6, np.expm1(zs) / zs)


def phi2(z: np.ndarray) -> np.ndarray:
    """(e^z - 1 - z) / z^2, continuous at 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    series = 0.5 + z * (1 / 6 + z * (1 / 24 + z * (1 / 120 + z / 720)))
    return np.where(small, series, (np.expm1(zs) - zs) / (zs * zs))


class SpectralLayout:
    """Maps between ``SpectralField`` and the compact de-aliased batch layout."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.dim = grid.dim
        self.M = grid.modes_per_axis
        self.K = K = grid.kept_radius
        self.P = sfft.next_fast_len(4 * K + 1, real=True)
        k_half = np.arange(K + 1)
        if self.dim == 1:
            self.shape = (K + 1,)
            k_axes = (k_half,)
            self._full_index = (k_half,)
        else:
            k_full = np.concatenate([np.arange(K + 1), np.arange(-K, 0)])
            self.shape = (2 * K + 1, K + 1)
            k_axes = tuple(np.meshgrid(k_full, k_half, indexing="ij"))
            self._k0 = k_full
            self._full_index = np.ix_(k_full % self.M, k_half)
            self._pad_index = np.ix_(k_full % self.P, k_half)
        scale = np.pi / grid.half_width
        self.xi = tuple(scale * k for k in k_axes)
        self.xi2 = sum(x * x for x in self.xi)
        # each stored half-spectrum entry stands for itself and its conjugate
        w = np.full(self.shape, 2.0)
        w[..., 0] = 1.0
        self.weights = w

    # conversions -------------------------------------------------------
    def pack(self, fields) -> np.ndarray:
        rows = []
        for f in fields:
            if f.grid.shape != self.grid.shape or f.grid.half_width != self.grid.half_width:
                raise ConfigurationError("field grid differs from the integrator grid")
            raw = f.coeffs * self.grid.phase
            rows.append(raw[self._full_index])
        return np.array(rows, dtype=complex)

    def unpack(self, c: np.ndarray, grid: GridSpec | None = None) -> SpectralField:
        grid = grid or self.grid
        M, K = self.M, self.K
        full = np.zeros(grid.shape, dtype=complex)
        if self.dim == 1:
            full[: K + 1] = c
            full[0] = full[0].real
            full[M - np.arange(1, K + 1)] = np.conj(c[1:])
        else:
            full[self._full_index] = c
            neg0 = (-self._k0) % M
            neg1 = (-np.arange(1, K + 1)) % M
            full[np.ix_(neg0, neg1)] = np.conj(c[:, 1:])
        return SpectralField(grid, full * grid.phase)

    def padded_physical(self, c: np.ndarray) -> np.ndarray:
        P = self.P
        if self.dim == 1:
            return sfft.irfft(c, n=P, axis=-1) * P
        Z = np.zeros(c.shape[:-2] + (P, P // 2 + 1), dtype=complex)
        Z[(...,) + self._pad_index] = c
        return sfft.irfft2(Z, s=(P, P)) * P * P

    def from_padded(self, v: np.ndarray) -> np.ndarray:
        P = self.P
        if self.dim == 1:
            return sfft.rfft(v, axis=-1)[..., : self.K + 1] / P
        return sfft.rfft2(v)[(...,) + self._pad_index] / (P * P)

    def physical(self, c: np.ndarray) -> np.ndarray:
        """Values on the M-point grid (batch axes preserved)."""
        M = self.M
        if self.dim == 1:
            return sfft.irfft(c, n=M, axis=-1) * M
        Z = np.zeros(c.shape[:-2] + (M, M // 2 + 1), dtype=complex)
        Z[(...,) + self._full_index] = c
        return sfft.irfft2(Z, s=(M, M)) * M * M

    def cube(self, c: np.ndarray) -> np.ndarray:
        """Projection of u^3 onto the kept modes, exact for de-aliased u."""
        v = self.padded_physical(c)
        return self.from_padded(v * v * v)

    # diagnostics -------------------------------------------------------
    def _sum(self, a: np.ndarray) -> np.ndarray:
        return np.sum(a.reshape(a.shape[: a.ndim - self.dim] + (-1,)), axis=-1)

    def l2_sq(self, c) -> np.ndarray:
        return self.grid.volume * self._sum(self.weights * np.abs(c) ** 2)

    def grad_sq(self, c) -> np.ndarray:
        return self.grid.volume * self._sum(self.weights * self.xi2 * np.abs(c) ** 2)

    def tail_mass(self, c, k_radius: float) -> np.ndarray:
        if not 0 < k_radius < self.grid.half_width:
            raise DomainError(f"tail radius must lie in (0, {self.grid.half_width}), got {k_radius}")
        u = self.physical(c)
        outside = self.grid.radius > k_radius
        return np.sum(np.where(outside, u * u, 0.0).reshape(u.shape[: u.ndim - self.dim] + (-1,)),
                      axis=-1) * self.grid.dx**self.dim


class Integrator:
    """Batched exponential integrator for one problem and a set of hull offsets."""

    def __init__(self, p: ProblemSpec, scheme: SchemeConfig, offsets=(0.0,)):
        self.p = p
        self.scheme = scheme
        self.layout = SpectralLayout(scheme.grid_for(p.grid))
        self.offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        if self.offsets.ndim != 1:
            raise ConfigurationError("offsets must be one-dimensional")
        self.batch = self.offsets.size
        lay = self.layout
        self._bshape = (self.batch,) + (1,) * lay.dim
        self.gA, self.gB = lay.pack([p.forcing.g_A, p.forcing.g_B])
        self._constant = p.A.max_frequency == 0 and p.a0.max_frequency == 0
        self._cache: dict = {}

    def linear_exponent(self, t0: float, t1: float) -> np.ndarray:
        """z = -(E(t0, t1) + int a0) per member and mode."""
        if self._constant:
            key = round(t1 - t0, 15)
            if key not in self._cache:
                self._cache[key] = self._exponent(0.0, t1 - t0)
            return self._cache[key]
        return self._exponent(t0, t1)

    def _exponent(self, t0, t1):
        p, lay = self.p, self.layout
        off = self.offsets
        E = p.A.quadratic_form(p.A.primitives(t0, t1, p.omega, off), lay.xi)
        a0 = np.asarray(p.a0.primitive(t0, t1, p.omega, off)).reshape(self._bshape)
        return -(E + a0) * np.ones(self._bshape)

    def forcing(self, t: float) -> np.ndarray:
        s = np.asarray(self.p.forcing.time_factor.value(self.p.omega * t + self.offsets))
        return self.gA + s.reshape(self._bshape) * self.gB

    def nonlinear(self, t: float, c: np.ndarray) -> np.ndarray:
        b = np.asarray(self.p.nonlin.b.value(self.p.omega * t + self.offsets))
        return -b.reshape(self._bshape) * self.layout.cube(c)

    def rhs(self, t: float, c: np.ndarray) -> np.ndarray:
        return self.nonlinear(t, c) + self.forcing(t)

    def step(self, t: float, c: np.ndarray, h: float) -> np.ndarray:
        z = self.linear_exponent(t, t + h)
        E = np.exp(z)
        p1 = phi1(z)
        F0 = self.rhs(t, c)
        if self.scheme.order == 1:
            return E * c + h * p1 * F0
        zh = self.linear_exponent(t, t + 0.5 * h)
        U = np.exp(zh) * c + 0.5 * h * phi1(zh) * F0
        F1 = self.rhs(t + 0.5 * h, U)
        p2 = phi2(z)
        return E * c + h * ((p1 - 2 * p2) * F0 + 2 * p2 * F1)


@dataclass(eq=False)
class BatchTrajectory:
    """Sampled norms (and optionally states) of a batch of solutions."""

    layout: SpectralLayout
    offsets: np.ndarray
    times: np.ndarray
    l2_sq: np.ndarray
    grad_sq: np.ndarray
    tail: np.ndarray | None
    states: np.ndarray | None
    final: np.ndarray
    step: float
    n_steps: int

    @property
    def batch(self) -> int:
        return self.offsets.size

    @property
    def h1_sq(self) -> np.ndarray:
        return self.l2_sq + self.grad_sq

    def state(self, member: int, sample: int, grid: GridSpec | None = None) -> SpectralField:
        if self.states is None:
            raise ConfigurationError("states were not recorded for this run")
        return self.layout.unpack(self.states[member, sample], grid)

    def final_state(self, member: int, grid: GridSpec | None = None) -> SpectralField:
        return self.layout.unpack(self.final[member], grid)


@dataclass(eq=False)
class Trajectory:
    """A single sampled solution with its diagnostics."""

    spec: ProblemSpec
    scheme: SchemeConfig
    times: np.ndarray
    states: list = field(repr=False)
    l2: np.ndarray = field(repr=False)
    h1: np.ndarray = field(repr=False)
    tail: np.ndarray | None = field(default=None, repr=False)
    step: float = 0.0

    def to_table(self) -> dict:
        cols = {"time": self.times, "l2": self.l2, "h1": self.h1}
        if self.tail is not None:
            cols["tail_mass"] = self.tail
        return cols

    def write_tsv(self, path) -> Path:
        meta = dict(self.spec.constants())
        meta.update(step=self.step, order=self.scheme.order)
        return write_table(path, self.to_table(), meta)


def _time_grid(s: float, t_end: float, h: float) -> tuple[int, float]:
    if t_end < s:
        raise ConfigurationError(f"t_end must be >= s, got s={s}, t_end={t_end}")
    if t_end == s:
        return 0, h
    n = max(1, math.ceil((t_end - s) / h - 1e-9))
    return n, (t_end - s) / n


def evolve_batch(
    p: ProblemSpec,
    scheme: SchemeConfig,
    s: float,
    t_end: float,
    initial,
    offsets=None,
    *,
    sample_every: int = 1,
    record_after: float = -np.inf,
    keep_states: bool = False,
    tail_radius: float | None = None,
    step: float | None = None,
) -> BatchTrajectory:
    """Evolve a batch from time ``s`` to ``t_end``.

    ``initial`` is one field (shared by all members) or a sequence of fields;
    ``offsets`` are hull shifts in the fast variable, one per member.
    Samples are taken every ``sample_every`` steps at times >= ``record_after``,
    and always at ``t_end``.
    """
    fields = [initial] if isinstance(initial, SpectralField) else list(initial)
    if offsets is None:
        offsets = np.zeros(len(fields))
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    if len(fields) == 1 and offsets.size > 1:
        fields = fields * offsets.size
    if len(fields) != offsets.size:
        raise ConfigurationError(f"{len(fields)} initial fields for {offsets.size} offsets")
    if int(sample_every) < 1:
        raise ConfigurationError("sample_every must be >= 1")
    integ = Integrator(p, scheme, offsets)
    lay = integ.layout
    c = lay.pack(fields)
    h = scheme.step_size(p) if step is None else float(step)
    n, h = _time_grid(s, t_end, h)

    times, l2, gr, tails, states = [], [], [], [], []

    def record(t, c):
        times.append(t)
        l2.append(lay.l2_sq(c))
        gr.append(lay.grad_sq(c))
        if tail_radius is not None:
            tails.append(lay.tail_mass(c, tail_radius))
        if keep_states:
            states.append(c.copy())

    if s >= record_after:
        record(s, c)
    for j in range(n):
        t = s + j * h
        with np.errstate(over="ignore", invalid="ignore"):
            c = integ.step(t, c, h)
        if not np.all(np.isfinite(c)):
            raise BlowUpError("integrator produced a non-finite state", time=t + h)
        t_next = s + (j + 1) * h
        if (j + 1 == n or (j + 1) % sample_every == 0) and t_next >= record_after:
            record(t_next, c)

    return BatchTrajectory(
        layout=lay,
        offsets=offsets,
        times=np.array(times),
        l2_sq=np.array(l2).T if l2 else np.zeros((offsets.size, 0)),
        grad_sq=np.array(gr).T if gr else np.zeros((offsets.size, 0)),
        tail=np.array(tails).T if tail_radius is not None and tails else None,
        states=np.stack(states, axis=1) if keep_states and states else None,
        final=c,
        step=h,
        n_steps=n,
    )


def nemitski(p: ProblemSpec, tau: float, u: SpectralField) -> SpectralField:
    """De-aliased f(tau, u) = -b(tau) u^3 as a field (tau is the fast variable)."""
    lay = SpectralLayout(p.grid)
    c = lay.pack([u])
    b = float(p.nonlin.b.value(tau))
    return lay.unpack(-b * lay.cube(c)[0])


def step(p: ProblemSpec, scheme: SchemeConfig, t_n: float, u_n: SpectralField) -> SpectralField:
    """One step of size ``scheme.step_size(p)`` from ``t_n``."""
    integ = Integrator(p, scheme)
    c = integ.step(t_n, integ.layout.pack([u_n]), scheme.step_size(p))
    if not np.all(np.isfinite(c)):
        raise BlowUpError("integrator produced a non-finite state", time=t_n)
    return integ.layout.unpack(c[0], u_n.grid)


def evolve(
    p: ProblemSpec,
    scheme: SchemeConfig,
    s: float,
    t_end: float,
    u_s: SpectralField,
    *,
    sample_every: int = 1,
    tail_radius: float | None = None,
) -> Trajectory:
    run = evolve_batch(p, scheme, s, t_end, u_s, sample_every=sample_every,
                       keep_states=True, tail_radius=tail_radius)
    states = [run.state(0, j, u_s.grid) for j in range(run.times.size)]
    return Trajectory(
        spec=p,
        scheme=scheme,
        times=run.times,
        states=states,
        l2=np.sqrt(run.l2_sq[0]),
        h1=np.sqrt(run.h1_sq[0]),
        tail=None if run.tail is None else run.tail[0],
        step=run.step,
    )


_MAGIC = b"RDAVGSNP"


def write_snapshots(path, grid: GridSpec, times, fields) -> Path:
    """Binary snapshot file: little-endian header then complex128 row-major coefficients.

    Header: 8-byte magic, uint32 version, uint32 dim, uint32 modes_per_axis,
    float64 half_width, float64 dealias_fraction, uint32 count; then per
    snapshot a float64 time followed by ``M**dim`` complex128 values in FFT
    order.
    """
    path = Path(path)
    times = list(times)
    fields = list(fields)
    if len(times) != len(fields):
        raise ConfigurationError("times and fields differ in length")
    with path.open("wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIIddI", 1, grid.dim, grid.modes_per_axis,
                             grid.half_width, grid.dealias_fraction, len(fields)))
        for t, f in zip(times, fields):
            fh.write(struct.pack("<d", float(t)))
            fh.write(np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes())
    return path


def read_snapshots(path) -> tuple[GridSpec, np.ndarray, list]:
    data = Path(path).read_bytes()
    if data[:8] != _MAGIC:
        raise ConfigurationError(f"{path} is not a snapshot file")
    head = struct.calcsize("<IIIddI")
    version, dim, M, hw, frac, count = struct.unpack("<IIIddI", data[8: 8 + head])
    if version != 1:
        raise ConfigurationError(f"unsupported snapshot version {version}")
    grid = GridSpec(dim=dim, half_width=hw, modes_per_axis=M, dealias_fraction=frac)
    n = M**dim
    pos = 8 + head
    times, fields = [], []
    for _ in range(count):
        (t,) = struct.unpack("<d", data[pos: pos + 8])
        pos += 8
        c = np.frombuffer(data[pos: pos + 16 * n], dtype="<c16").reshape(grid.shape)
        pos += 16 * n
        times.append(t)
        fields.append(SpectralField(grid, c))
    return grid, np.array(times), fields
