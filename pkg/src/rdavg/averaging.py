"""Measured distances between oscillatory dynamics and their averaged limits.

* linear gap ``sup_t ||U_omega(t, s) u - exp(-Abar (t - s)) u||_H1``;
* oscillatory convolutions ``G^j(t) = int_s^t exp(-Abar (t - p)) D_j(p) dp``
  with the coefficient deviations ``D_1 = (a0 - abar0) v``,
  ``D_2 = f(v) - fbar(v)``, ``D_3 = g - gbar``;
* nonlinear trajectory gap ``sup_t ||Pi_omega(t, s) u - pi(t - s) u||_H1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import ProblemSpec
from .dynamics import SchemeConfig, SpectralLayout, evolve_batch
from .errors import ConfigurationError, DomainError
from .estimates import sobolev_constant
from .propagator import exponent, smoothing_constant, theta_envelope
from .spectral import SpectralField, norm_h1, norm_l2
from .tables import write_table

__all__ = [
    "GapCurve",
    "linear_gap",
    "linear_gap_curve",
    "initial_layer_curve",
    "GFunctionals",
    "g_functionals",
    "g3_by_parts",
    "nemitski_average_check",
    "trajectory_gap_curve",
]

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(8)


@dataclass(eq=False)
class GapCurve:
    omegas: np.ndarray
    gaps: np.ndarray
    metric: str
    context: dict = field(default_factory=dict)
    tolerance: np.ndarray | None = None
    raw: np.ndarray | None = None

    def __post_init__(self):
        self.omegas = np.asarray(self.omegas, dtype=float)
        self.gaps = np.asarray(self.gaps, dtype=float)
        if self.omegas.shape != self.gaps.shape:
            raise ConfigurationError("omega and gap lists differ in length")
        if np.any(np.diff(self.omegas) <= 0):
            raise ConfigurationError("omega values must be strictly increasing")
        if np.any(self.gaps < 0):
            raise ConfigurationError("gaps must be nonnegative")

    def nonincreasing(self, band: float) -> bool:
        """gap[i+1] <= (1 + band) gap[i] for consecutive entries."""
        g = self.gaps
        return bool(np.all(g[1:] <= (1.0 + band) * g[:-1] + 1e-300))

    def floored(self, atol: float) -> "GapCurve":
        """Copy with gaps at or below ``atol`` (rounding level) set to zero."""
        gaps = np.where(self.gaps <= atol, 0.0, self.gaps)
        return GapCurve(self.omegas, gaps, self.metric, dict(self.context), self.tolerance, self.raw)

    def ratio(self) -> float:
        """gap at the largest omega over gap at the smallest."""
        if self.gaps[0] == 0:
            return 0.0 if self.gaps[-1] == 0 else np.inf
        return float(self.gaps[-1] / self.gaps[0])

    def step_ratios(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.gaps[1:] / self.gaps[:-1]

    def write_tsv(self, path):
        cols = {"omega": self.omegas, "gap": self.gaps}
        cols["tolerance"] = (np.zeros_like(self.gaps) if self.tolerance is None
                             else self.tolerance)
        if self.raw is not None:
            cols["raw_gap"] = self.raw
        meta = {"metric": self.metric}
        meta.update(self.context)
        return write_table(path, cols, meta)


def _check_window(delta, T):
    if not 0 <= delta < T:
        raise DomainError(f"need 0 <= delta < T, got delta={delta}, T={T}")


def _time_grid(p: ProblemSpec, s, t0, t1, per_period=32, minimum=200):
    nu = p.A.max_frequency
    n = minimum
    if nu > 0:
        n = max(n, int(np.ceil((t1 - t0) * p.omega * nu / (2 * np.pi) * per_period)))
    return np.linspace(t0, t1, n + 1)


def linear_gap(p: ProblemSpec, u: SpectralField, s: float, times) -> np.ndarray:
    """||U(t, s) u - exp(-Abar (t - s)) u||_H1 at each ``t`` (vectorised)."""
    times = np.asarray(times, dtype=float)
    g = p.grid
    E = exponent(p, s, times)
    abar = p.A.mean_matrix()
    form = sum(abar[i, j] * g.xi[i] * g.xi[j] for i in range(g.dim) for j in range(g.dim))
    tau = (times - s).reshape((-1,) + (1,) * g.dim)
    diff = (np.exp(-E) - np.exp(-form * tau)) * u.coeffs
    w = (1.0 + g.xi2) * g.volume
    return np.sqrt(np.sum((w * np.abs(diff) ** 2).reshape(times.size, -1), axis=1))


def linear_gap_curve(p_base: ProblemSpec, u: SpectralField, s: float = 0.0,
                     delta: float = 0.1, T: float = 2.0, omegas=(1, 2, 4, 8),
                     per_period: int = 32) -> GapCurve:
    """sup over [s+delta, s+T] of the linear gap, per omega.

    The context records the sanity ceiling ``2 M (1 + delta^-1/2) ||u||`` and
    the largest ratio of the pointwise gap to the theta envelope.
    """
    _check_window(delta, T)
    if delta == 0:
        raise DomainError("the linear gap needs delta > 0")
    omegas = np.asarray(omegas, dtype=float)
    sups, envelope_ratio = [], []
    l2 = norm_l2(u)
    for om in omegas:
        p = p_base.with_omega(om)
        t = _time_grid(p, s, s + delta, s + T, per_period)
        gap = linear_gap(p, u, s, t)
        sups.append(gap.max())
        env = (1 + (t - s) ** -0.5) * np.asarray(theta_envelope(p.A, om * (t - s))) * l2
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(env > 0, gap / env, np.where(gap > 1e-13 * l2, np.inf, 0.0))
        envelope_ratio.append(float(r.max()))
    ceiling = 2 * smoothing_constant(p_base.nu0) * (1 + delta**-0.5) * l2
    ctx = {"delta": delta, "T": T, "s": s, "ceiling": ceiling,
           "max_envelope_ratio": max(envelope_ratio), "l2_norm": l2}
    return GapCurve(omegas, np.array(sups), "h1_sup", ctx)


def initial_layer_curve(p_base: ProblemSpec, u: SpectralField, s: float = 0.0,
                        omegas=(1, 2, 4, 8)) -> GapCurve:
    """Linear gap at t - s = 1/omega; stays bounded below for rough data."""
    omegas = np.asarray(omegas, dtype=float)
    gaps = [linear_gap(p_base.with_omega(om), u, s, [s + 1.0 / om])[0] for om in omegas]
    return GapCurve(omegas, np.array(gaps), "h1_at", {"s": s, "lag": "1/omega"})


# oscillatory convolutions ------------------------------------------------

def _panel_edges(lam_max: float, period: float, s: float, T: float) -> np.ndarray:
    width = min(period / 8.0, 2.0 / lam_max if lam_max > 0 else np.inf, T / 16.0)
    n = int(np.ceil(T / width))
    return s + T * np.arange(n + 1) / n


@dataclass(eq=False)
class GFunctionals:
    omega: float
    times: np.ndarray
    norms: dict          # j -> H1 norm of G^j at each time
    layout: SpectralLayout = field(repr=False)
    final: dict = field(repr=False, default_factory=dict)

    def sup(self, j: int) -> float:
        return float(np.max(self.norms[j]))


def _averaged_rates(p: ProblemSpec, lay: SpectralLayout) -> np.ndarray:
    abar = p.A.mean_matrix()
    return sum(abar[i, j] * lay.xi[i] * lay.xi[j]
               for i in range(lay.dim) for j in range(lay.dim)) * np.ones(lay.shape)


def _as_path(v, lay: SpectralLayout):
    """Return p -> compact coefficients for a constant field or a sampled trajectory."""
    if isinstance(v, SpectralField):
        c = lay.pack([v])[0]
        return lambda p: np.broadcast_to(c, np.shape(p) + c.shape)
    times = np.asarray(v.times, dtype=float)
    states = lay.pack(v.states)

    def path(p):
        p = np.asarray(p, dtype=float)
        j = np.clip(np.searchsorted(times, p, side="right") - 1, 0, times.size - 2)
        w = ((p - times[j]) / (times[j + 1] - times[j])).reshape(p.shape + (1,) * lay.dim)
        return (1 - w) * states[j] + w * states[j + 1]

    return path


def _deviations(p: ProblemSpec, lay: SpectralLayout, path):
    """D_j(p) as functions of an array of times, returning (n, *shape) arrays."""
    om = p.omega
    a0bar = p.a0.mean_value()
    bbar = p.nonlin.b.mean_value()
    gB = lay.pack([p.forcing.g_B])[0]
    tf = p.forcing.time_factor
    ext = (1,) * lay.dim

    def d1(q):
        return (np.asarray(p.a0.value(om * q)) - a0bar).reshape(q.shape + ext) * path(q)

    def d2(q):
        db = (np.asarray(p.nonlin.b.value(om * q)) - bbar).reshape(q.shape + ext)
        return -db * lay.cube(path(q))

    def d3(q):
        return np.asarray(tf.value(om * q)).reshape(q.shape + ext) * gB

    return {1: d1, 2: d2, 3: d3}


def _h1(lay: SpectralLayout, c) -> np.ndarray:
    return np.sqrt(lay.l2_sq(c) + lay.grad_sq(c))


def g_functionals(p_base: ProblemSpec, omega: float, s: float, T: float, v) -> GFunctionals:
    """Composite 8-point Gauss quadrature of G^1, G^2, G^3 on [s, s+T].

    Panels are at most 1/8 of the fastest coefficient period and ``2/lambda_max``
    wide; G is advanced panel by panel with the exact averaged multiplier.
    ``v`` is a constant field or an object with ``times``/``states``
    (linearly interpolated).
    """
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    p = p_base.with_omega(omega)
    lay = SpectralLayout(p.grid)
    lam = _averaged_rates(p, lay)
    nu = p.max_frequency
    period = 2 * np.pi / (omega * nu) if nu > 0 else T
    edges = _panel_edges(float(lam.max()), period, s, T)
    dev = _deviations(p, lay, _as_path(v, lay))
    G = {j: np.zeros(lay.shape, dtype=complex) for j in dev}
    norms = {j: [0.0] for j in dev}
    ext = (1,) * lay.dim
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes = a + half * (_GAUSS_X + 1)
        kern = np.exp(-lam * (b - nodes).reshape(-1, *ext)) * (half * _GAUSS_W).reshape(-1, *ext)
        decay = np.exp(-lam * (b - a))
        for j, d in dev.items():
            G[j] = decay * G[j] + np.sum(kern * d(nodes), axis=0)
            norms[j].append(float(_h1(lay, G[j])))
    return GFunctionals(omega, edges, {j: np.array(n) for j, n in norms.items()}, lay, G)


def g3_by_parts(p_base: ProblemSpec, omega: float, s: float, t: float) -> dict:
    """G^3(t) two ways: direct quadrature and the integration-by-parts form.

    With ``J(p) = int_p^t (g(omega q) - gbar) dq`` (closed form),
    ``G^3(t) = exp(-Abar (t - s)) J(s) + int_s^t Abar exp(-Abar (t - p)) J(p) dp``.
    Returns both H1 norms and the H1 norm of their difference.
    """
    p = p_base.with_omega(omega)
    lay = SpectralLayout(p.grid)
    direct = g_functionals(p, omega, s, t - s, SpectralField.zeros(p.grid)).final[3]
    lam = _averaged_rates(p, lay)
    gB = lay.pack([p.forcing.g_B])[0]
    tf = p.forcing.time_factor
    nu = p.max_frequency
    period = 2 * np.pi / (omega * nu) if nu > 0 else t - s
    edges = _panel_edges(float(lam.max()), period, s, t - s)
    ext = (1,) * lay.dim
    total = np.exp(-lam * (t - s)) * tf.primitive(s, t, omega) * gB
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes = a + half * (_GAUSS_X + 1)
        J = np.asarray(tf.primitive(nodes, t, omega)).reshape(-1, *ext)
        w = (half * _GAUSS_W).reshape(-1, *ext)
        total = total + np.sum(w * lam * np.exp(-lam * (t - nodes).reshape(-1, *ext)) * J, axis=0) * gB
    return {"direct": float(_h1(lay, direct)), "by_parts": float(_h1(lay, total)),
            "difference": float(_h1(lay, direct - total))}


def nemitski_average_check(p_base: ProblemSpec, u: SpectralField, omega: float,
                           windows=(0.05, 0.1, 0.5, 1.0, 2.0), starts=(0.0, 0.3, 1.7)) -> dict:
    """Largest ratio of ||(1/T) int (f - fbar)(u)||_L2 to K mu_b(omega T)(||u|| + ||u||_H1^3).

    ``K = S^2`` with ``S`` the discrete sup-norm constant of the kept modes.
    """
    p = p_base.with_omega(omega)
    lay = SpectralLayout(p.grid)
    c = lay.pack([u])[0]
    cube_l2 = float(np.sqrt(lay.l2_sq(lay.cube(c))))
    K = sobolev_constant(lay) ** 2
    size = norm_l2(u) + norm_h1(u) ** 3
    b = p.nonlin.b
    bbar = b.mean_value()
    worst = 0.0
    for T in windows:
        bound = K * float(b.mu_bound(omega * T)) * size
        for s in starts:
            dev = abs(b.primitive(s, s + T, omega) / T - bbar)
            if dev <= 8 * np.finfo(float).eps * abs(bbar):
                dev = 0.0       # rounding of the window mean, no oscillation left
            lhs = dev * cube_l2
            if bound == 0:
                worst = max(worst, 0.0 if lhs == 0 else np.inf)
            else:
                worst = max(worst, lhs / bound)
    return {"max_ratio": worst, "K": K}


# nonlinear trajectories ------------------------------------------------------

def _gap_run(p, avg, scheme, s, T, initial, offsets, sample_every, h):
    osc = evolve_batch(p, scheme, s, s + T, initial, offsets, sample_every=sample_every,
                       keep_states=True, step=h)
    ref = evolve_batch(avg, scheme, s, s + T, initial, offsets, sample_every=sample_every,
                       keep_states=True, step=h)
    return osc, ref


def _h1_diff(lay, a, b):
    return _h1(lay, a - b)


def trajectory_gap_curve(p_base: ProblemSpec, u_s, s: float = 0.0, delta: float = 0.1,
                         T: float = 2.0, omegas=(2, 4, 8), hull_shifts=(0.0,),
                         scheme: SchemeConfig | None = None) -> GapCurve:
    """sup over [s+delta, s+T], initial data and hull shifts of the nonlinear gap.

    Both flows share the step of the oscillatory run.  The run is repeated at
    half step; the Richardson estimate of the combined scheme error is
    reported as ``tolerance`` and subtracted from the raw sup.
    """
    _check_window(delta, T)
    scheme = scheme or SchemeConfig()
    fields = [u_s] if isinstance(u_s, SpectralField) else list(u_s)
    shifts = np.atleast_1d(np.asarray(hull_shifts, dtype=float))
    initial = [f for f in fields for _ in shifts]
    offsets = np.tile(shifts, len(fields))
    factor = 2.0**scheme.order / (2.0**scheme.order - 1.0)
    raw, tol = [], []
    omegas = np.asarray(omegas, dtype=float)
    for om in omegas:
        p = p_base.with_omega(om)
        avg = p.averaged()
        h = scheme.step_size(p)
        n = int(np.ceil(T / h - 1e-9))
        h = T / n
        osc, ref = _gap_run(p, avg, scheme, s, T, initial, offsets, 1, h)
        osc2, ref2 = _gap_run(p, avg, scheme, s, T, initial, offsets, 2, h / 2)
        lay = osc.layout
        window = osc.times >= s + delta - 1e-12
        gap = _h1_diff(lay, osc.states[:, window], ref.states[:, window])
        err = (_h1_diff(lay, osc.states[:, window], osc2.states[:, window])
               + _h1_diff(lay, ref.states[:, window], ref2.states[:, window])) * factor
        raw.append(float(gap.max()))
        tol.append(float(err.max()))
    raw, tol = np.array(raw), np.array(tol)
    ctx = {"delta": delta, "T": T, "s": s, "hull_shifts": shifts.tolist(),
           "ensemble": len(fields), "c_osc": scheme.c_osc, "order": scheme.order}
    return GapCurve(omegas, np.maximum(raw - tol, 0.0), "h1_sup", ctx, tolerance=tol, raw=raw)
