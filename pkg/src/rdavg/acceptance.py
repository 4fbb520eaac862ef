"""The ten acceptance checks, each returning a ``CriterionResult``.

``AcceptanceContext`` caches the expensive shared runs (the dissipative
ensemble feeds both the bound and the tail checks; the main cloud experiment
supplies the cloud resolution used by the zero-forcing check).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp

from .attractor import AttractorCloud, CloudParams, build_cloud, hausdorff_semidist, h1_embedding
from .coefficients import (ForcingSpec, ProblemSpec, QuasiPeriodicMatrix, QuasiPeriodicScalar,
                           translate)
from .config import ExperimentConfig, load_config
from .dynamics import SchemeConfig, SpectralLayout, evolve_batch
from .experiments import (attractor_experiment, check_bounds, dissipative_runs, g_experiment,
                          initial_ensemble, linear_experiment, trajectory_experiment)
from .propagator import apply_U, exponent, rho, shift_for_distance
from .spectral import GridSpec, SpectralField, norm_h1, norm_l2, random_field

__all__ = ["CriterionResult", "AcceptanceContext", "CRITERIA", "run_all"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    requirement: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        return f"{status} [{self.number}] {self.title}: {shown} (need {self.requirement})"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "requirement": self.requirement, "measured": _plain(self.measured)}


def _short(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.4g}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


class AcceptanceContext:
    def __init__(self, cfg: ExperimentConfig | None = None, jobs: int = 1,
                 keep_clouds: bool = False):
        self.cfg = cfg or load_config()
        self.jobs = jobs
        self.keep_clouds = keep_clouds

    @cached_property
    def dissipative(self) -> list:
        return dissipative_runs(self.cfg, jobs=self.jobs)

    @cached_property
    def bound_checks(self) -> list:
        return [check_bounds(self.cfg, r) for r in self.dissipative]

    @cached_property
    def usc(self):
        return attractor_experiment(self.cfg, keep_clouds=self.keep_clouds)

    @cached_property
    def linear(self):
        return linear_experiment(self.cfg)

    @cached_property
    def trajectory(self):
        return trajectory_experiment(self.cfg)

    @cached_property
    def g_functionals(self):
        return g_experiment(self.cfg)


# H1 size treated as zero: rounding level for unit-size data
NEGLIGIBLE = 1e-12


def _doubling_ratios(s: np.ndarray) -> np.ndarray:
    s = np.where(s <= NEGLIGIBLE, 0.0, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(s[1:] == 0, 0.0, s[1:] / s[:-1])


def _rng(seed):
    return np.random.default_rng(seed)


def criterion_1(ctx: AcceptanceContext) -> CriterionResult:
    """Cocycle composition and identity of the linear process."""
    p0 = ctx.cfg.problem
    rng = _rng(101)
    worst_comp, worst_id = 0.0, 0.0
    for _ in range(100):
        omega = float(rng.choice([1.0, 8.0, 64.0]))
        p = p0.with_omega(omega).hull_translate(rng.uniform(0, 2 * np.pi))
        s = rng.uniform(-10, 10)
        mid = s + rng.uniform(0, 3)
        t = mid + rng.uniform(0, 3)
        u = random_field(p.grid, rng, l2_norm=rng.uniform(0.1, 5), smoothness=2)
        direct = apply_U(p, s, t, u)
        composed = apply_U(p, mid, t, apply_U(p, s, mid, u))
        worst_comp = max(worst_comp, norm_h1(composed - direct) / norm_h1(direct))
        worst_id = max(worst_id, norm_h1(apply_U(p, s, s, u) - u) / norm_h1(u))
    passed = worst_comp <= 1e-12 and worst_id <= 1e-12
    return CriterionResult(1, "process laws", passed,
                           {"composition_rel_h1": worst_comp, "identity_rel_h1": worst_id},
                           "<= 1e-12 on 100 tuples")


def criterion_2(ctx: AcceptanceContext) -> CriterionResult:
    """Heat multiplier for constant coefficients; ODE oracle for oscillatory ones."""
    p0 = ctx.cfg.problem
    rng = _rng(202)
    heat_err = 0.0
    for grid in (p0.grid, GridSpec(dim=2, half_width=10.0, modes_per_axis=32)):
        p = _heat_problem(grid, p0)
        for _ in range(5):
            s = rng.uniform(-5, 5)
            t = s + rng.uniform(0.01, 2)
            u = random_field(grid, rng, smoothness=1)
            got = apply_U(p, s, t, u).coeffs
            want = np.exp(-grid.xi2 * (t - s)) * u.coeffs
            heat_err = max(heat_err, float(np.max(np.abs(got - want))))
    # oscillatory: per-mode linear ODE y' = -(sum_ij a_ij(omega t) xi_i xi_j) y
    ode_err = 0.0
    for omega in (1.0, 8.0, 64.0):
        p = p0.with_omega(omega).hull_translate(0.7)
        s, t = 0.3, 1.3
        xi = p.grid.wavenumbers[: p.grid.kept_radius + 1]
        a = p.A.entry(0, 0)
        sol = solve_ivp(lambda tt, y: -a.value(omega * tt) * xi**2 * y, (s, t),
                        np.ones_like(xi), method="DOP853", rtol=1e-13, atol=1e-300)
        oracle = sol.y[:, -1]
        mult = np.exp(-exponent(p, s, t)[: xi.size])
        ode_err = max(ode_err, float(np.max(np.abs(mult - oracle))))
    passed = heat_err <= 1e-12 and ode_err <= 1e-10
    return CriterionResult(2, "heat-kernel and ODE oracles", passed,
                           {"heat_multiplier_err": heat_err, "ode_oracle_err": ode_err},
                           "heat <= 1e-12, ODE <= 1e-10")


def _heat_problem(grid, p0):
    """Identity diffusion on ``grid``, unforced, other data from ``p0``."""
    z = SpectralField.zeros(grid)
    A = QuasiPeriodicMatrix.isotropic(grid.dim, QuasiPeriodicScalar.constant(1.0))
    return ProblemSpec(grid, A, p0.a0, p0.nonlin, ForcingSpec(z, z), p0.omega)


def criterion_3(ctx: AcceptanceContext) -> CriterionResult:
    checks = ctx.bound_checks
    keys = ("l2_violations", "h1_violations", "absorbing_violations", "energy_violations")
    total = sum(c[k] for c in checks for k in keys)
    measured = {
        "omegas": [c["omega"] for c in checks],
        "violations": total,
        "l2_worst_ratio": max(c["l2_worst_ratio"] for c in checks),
        "h1_worst_ratio": max(c["h1_worst_ratio"] for c in checks),
        "max_h1_after_T": max(c["absorbing_max_h1"] for c in checks),
        "K": checks[0]["K"],
        "samples": sum(c["samples"] for c in checks),
    }
    return CriterionResult(3, "dissipative bounds", total == 0, measured,
                           "zero violations over seeds x hull shifts x omegas")


def criterion_4(ctx: AcceptanceContext) -> CriterionResult:
    checks = ctx.bound_checks
    total = sum(c["tail_violations"] for c in checks)
    samples = sum(c["tail_samples"] for c in checks)
    measured = {"T_bar": checks[0]["tail_time"], "violations": total,
                "worst_tail_ratio": max(c["tail_worst_ratio"] for c in checks), "samples": samples}
    return CriterionResult(4, "tail estimate", total == 0 and samples > 0, measured,
                           "tail <= 1e-6 ||u||^2 for t - s >= T_bar")


def criterion_5(ctx: AcceptanceContext) -> CriterionResult:
    p0 = ctx.cfg.problem
    rng = _rng(505)
    nu0 = p0.nu0
    violations, worst = 0, 0.0
    for q in (1e-3, 1e-2, 1e-1):
        shift = shift_for_distance(p0.A, q)
        for _ in range(50):
            omega = float(rng.choice([1.0, 8.0, 64.0]))
            p1 = p0.with_omega(omega).hull_translate(rng.uniform(0, 2 * np.pi))
            p2 = p1.hull_translate(shift)
            s = rng.uniform(-5, 5)
            t = s + 10 ** rng.uniform(-2, 0.5)
            u = random_field(p1.grid, rng, l2_norm=rng.uniform(0.1, 5), smoothness=rng.uniform(0.6, 3))
            gap = norm_h1(apply_U(p1, s, t, u) - apply_U(p2, s, t, u))
            bound = (1 + (t - s) ** -0.5) * rho(q, nu0) * norm_l2(u)
            violations += gap > bound
            worst = max(worst, gap / bound)
    return CriterionResult(5, "process-difference bound", violations == 0,
                           {"violations": violations, "worst_ratio": worst},
                           "zero violations on 3 x 50 draws")


def criterion_6(ctx: AcceptanceContext) -> CriterionResult:
    band = ctx.cfg.verification["band_gap"]
    gap, layer = (c.floored(NEGLIGIBLE) for c in ctx.linear)
    floor = 0.5 * layer.gaps[0]
    ok = (gap.nonincreasing(band) and gap.ratio() <= 0.1
          and bool(np.all(gap.gaps <= gap.context["ceiling"])) and bool(np.all(layer.gaps >= floor)))
    measured = {"gaps": gap.gaps, "ratio": gap.ratio(), "ceiling": gap.context["ceiling"],
                "envelope_ratio": gap.context["max_envelope_ratio"],
                "layer_min": layer.gaps.min(), "layer_floor": floor}
    return CriterionResult(6, "linear averaging", ok, measured,
                           "nonincreasing within 10%, gap(128) <= 0.1 gap(1), layer >= floor")


def criterion_7(ctx: AcceptanceContext) -> CriterionResult:
    band = ctx.cfg.verification["band_gap"]
    gap, zero = (c.floored(NEGLIGIBLE) for c in ctx.trajectory)
    ok = (gap.nonincreasing(band) and gap.ratio() <= 0.2
          and zero.nonincreasing(band) and zero.ratio() < 1.0)
    measured = {"gaps": gap.gaps, "raw": gap.raw, "scheme_err": gap.tolerance,
                "ratio": gap.ratio(), "delta0_gaps": zero.gaps, "delta0_ratio": zero.ratio()}
    return CriterionResult(7, "nonlinear averaging", ok, measured,
                           "final/initial <= 0.2 after scheme-error subtraction; delta=0 decreasing")


def criterion_8(ctx: AcceptanceContext) -> CriterionResult:
    G = ctx.g_functionals
    ratios = {j: _doubling_ratios(G.sups[j]) for j in (1, 2, 3)}
    worst_ratio = max(float(r.max()) for r in ratios.values())
    ibp = max(d["difference"] for d in G.by_parts)
    ok = worst_ratio <= 0.8 and ibp <= 1e-8 and G.nemitski_ratio <= 1.0
    measured = {"omegas": G.omegas, "max_doubling_ratio": worst_ratio, "ibp_err": ibp,
                "nemitski_ratio": G.nemitski_ratio,
                **{f"G{j}_sup": G.sups[j] for j in (1, 2, 3)}}
    return CriterionResult(8, "G-functionals", ok, measured,
                           "ratio per doubling <= 0.8, IBP identity <= 1e-8")


def _oracle_semidist(X: AttractorCloud, Y: AttractorCloud) -> float:
    ex, ey = h1_embedding(X), h1_embedding(Y)
    return max(min(float(np.sqrt(np.sum((x - y) ** 2))) for y in ey) for x in ex)


def criterion_9(ctx: AcceptanceContext) -> CriterionResult:
    cfg = ctx.cfg
    res = ctx.usc
    band = cfg.verification["band_cloud"]
    d, eps = res.distance, res.eps_cloud
    curve_ok = res.nonincreasing(band) and d[-1] <= max(0.2 * d[0], 3 * eps[-1])
    # Hausdorff routine against the brute-force oracle
    rng = _rng(909)
    grid = cfg.grid
    oracle_err = 0.0
    for n1, n2 in ((1, 1), (7, 13), (60, 100), (100, 40)):
        X = AttractorCloud.from_fields([random_field(grid, rng, l2_norm=rng.uniform(0.5, 2))
                                        for _ in range(n1)])
        Y = AttractorCloud.from_fields([random_field(grid, rng, l2_norm=rng.uniform(0.5, 2))
                                        for _ in range(n2)])
        oracle_err = max(oracle_err, abs(hausdorff_semidist(X, Y) - _oracle_semidist(X, Y)))
    # zero forcing collapses onto {0}
    zero_cfg = cfg.with_overrides(problem={"forcing": {"profile": "zero"}})
    a = cfg.attractor
    params = CloudParams(transient=a["transient"], window=a["window"],
                         sample_spacing=a["sample_spacing"],
                         tail_radius=cfg.verification["tail_radius"])
    ens = initial_ensemble(cfg, seeds=range(a["ensemble"]), radius=2.0)
    zero_cloud = build_cloud(zero_cfg.problem, 8.0, cfg.attractor_shifts()[:4], ens, params,
                             cfg.scheme)
    origin = AttractorCloud.from_fields([SpectralField.zeros(grid)])
    collapse = hausdorff_semidist(zero_cloud, origin)
    eps_ref = float(eps[-1])
    ok = curve_ok and oracle_err == 0.0 and collapse <= eps_ref
    measured = {"omegas": res.omegas, "d": d, "eps_cloud": eps, "reverse": res.reverse,
                "d_final_over_d_first": d[-1] / d[0], "oracle_err": oracle_err,
                "zero_forcing_distance": collapse, "eps_ref": eps_ref}
    return CriterionResult(9, "attractor upper semicontinuity", ok, measured,
                           "nonincreasing within 15%, d(64) <= max(0.2 d(1), 3 eps), "
                           "oracle exact, zero forcing within eps")


def _order_estimates(p, order, u, T=1.0, h0=0.05):
    ref = evolve_batch(p, SchemeConfig(base_step=h0 / 64, c_osc=1.0, order=order), 0.0, T, u).final
    lay = SpectralLayout(p.grid)
    errs = []
    for k in range(3):
        h = h0 / 2**k
        f = evolve_batch(p, SchemeConfig(base_step=h, c_osc=1.0, order=order), 0.0, T, u).final
        errs.append(float(np.sqrt(lay.l2_sq(f - ref)[0] + lay.grad_sq(f - ref)[0])))
    errs = np.array(errs)
    return errs, np.log2(errs[:-1] / errs[1:])


def criterion_10(ctx: AcceptanceContext) -> CriterionResult:
    cfg = ctx.cfg
    p = cfg.problem.with_omega(4.0)
    u = initial_ensemble(cfg, seeds=[3], radius=3.0)[0]
    measured, ok = {}, True
    for order in (1, 2):
        errs, orders = _order_estimates(p, order, u)
        measured[f"order{order}_errors"] = errs
        measured[f"order{order}_observed"] = orders
        ok &= bool(np.all(orders >= order - 0.2))
    # translation identity: T_omega(h) sigma over [s, t] versus sigma over [s+h, t+h]
    pw = cfg.problem.with_omega(8.0)
    h, s, t = 0.37, 0.2, 1.5
    shifted = evolve_batch(translate(pw, h), cfg.scheme, s, t, u).final
    direct = evolve_batch(pw, cfg.scheme, s + h, t + h, u).final
    lay = SpectralLayout(pw.grid)
    diff = np.sqrt(lay.l2_sq(shifted - direct) + lay.grad_sq(shifted - direct))[0]
    rel = float(diff / np.sqrt(lay.l2_sq(direct) + lay.grad_sq(direct))[0])
    measured["translation_rel_h1"] = rel
    ok &= rel <= 1e-10
    return CriterionResult(10, "scheme integrity", ok, measured,
                           "observed order >= nominal - 0.2; translation identity <= 1e-10")


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 11)}


def run_all(ctx: AcceptanceContext | None = None, only=None, echo=print) -> list:
    ctx = ctx or AcceptanceContext()
    results = []
    for i, fn in CRITERIA.items():
        if only and i not in only:
            continue
        r = fn(ctx)
        results.append(r)
        if echo:
            echo(r.line())
    return results
