"""Command line interface.

Stages share one output directory::

    rdavg validate       constants and hypothesis checks        -> validate.json
    rdavg simulate       dissipative ensemble runs               -> simulate/, simulate.json
    rdavg verify-bounds  bound, absorbing and tail checks        -> bounds.tsv, verify-bounds.json
    rdavg averaging      gap curves and G-functionals            -> averaging/, averaging.json
    rdavg attractor      cloud distances and manifests           -> attractor/, attractor.json
    rdavg acceptance     the ten acceptance checks               -> acceptance.tsv, acceptance.json
    rdavg report         summary.json plus PNG figures           -> summary.json, figures/

Exit codes: 0 ok, 2 invalid configuration, 3 numerical failure, 4 a check
failed, 5 missing upstream stage, 6 I/O error.  The output root defaults to
``$RDAVG_OUT`` and then to the config's ``output`` entry.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import CRITERIA, AcceptanceContext
from .coefficients import check_hypotheses
from .config import ExperimentConfig, load_config
from .errors import DependencyError, RdavgError
from .estimates import absorbing_constants, l2_bound
from .experiments import DissipativeRun, dissipative_runs
from .report import write_summary
from .tables import write_table

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_CHECK_FAILED, EXIT_IO = 0, 4, 6


class _Stage:
    """Per-invocation state: config, output directory and echo."""

    def __init__(self, args):
        self.args = args
        self.cfg = _configure(args)
        root = args.out or os.environ.get("RDAVG_OUT") or self.cfg.raw["output"]
        self.out = Path(root)
        self.out.mkdir(parents=True, exist_ok=True)

    def echo(self, msg: str = ""):
        if not self.args.quiet:
            print(msg)

    def meta(self, **extra) -> dict:
        """Header block for every table: constants, scheme and provenance."""
        p = self.cfg.problem
        if "omega" in extra:
            p = p.with_omega(extra["omega"])
        return {"rdavg_version": __version__, "schema_version": self.cfg.raw["schema_version"],
                "constants": p.constants(), "scheme": self.cfg.scheme.to_dict(),
                "grid": self.cfg.raw["grid"], **extra}

    def write_json(self, name: str, data: dict) -> Path:
        path = self.out / f"{name}.json"
        body = {"stage": name, "rdavg_version": __version__, "constants": self.cfg.constants(),
                **data}
        path.write_text(json.dumps(body, indent=2, default=_json_default))
        return path


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serialisable: {type(v).__name__}")


def _configure(args) -> ExperimentConfig:
    over: dict = {}
    cmd = args.command
    if args.seed is not None:
        n = len(load_config(args.config).seeds)
        over["sweeps"] = {"seeds": list(range(args.seed, args.seed + n))}
    if args.omega_list:
        om = args.omega_list
        if cmd == "attractor":
            over["attractor"] = {"omegas": om}
        elif cmd == "averaging":
            over["verification"] = {"linear_omegas": om, "trajectory_omegas": om,
                                    "g_omegas": om}
        else:
            over.setdefault("sweeps", {})["omegas"] = om
    return load_config(args.config, over or None)


def _omega_tag(w: float) -> str:
    return f"{w:g}".replace(".", "p")


# stages --------------------------------------------------------------------

def cmd_validate(st: _Stage) -> int:
    p = st.cfg.problem
    hyp = check_hypotheses(p)
    consts = {**st.cfg.constants(), **absorbing_constants(p)}
    ok = all(v[0] for v in hyp.values())
    st.echo("OK" if ok else "HYPOTHESIS CHECK FAILED")
    for k in ("nu0", "lambda0", "C_g", "L"):
        st.echo(f"{k} = {consts[k]:.6g}")
    (st.out / "config.json").write_text(st.cfg.to_json())
    st.write_json("validate", {
        "passed": ok, "certified": consts,
        "hypotheses": {k: {"passed": bool(a), "measured": b, "bound": c}
                       for k, (a, b, c) in hyp.items()},
    })
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_simulate(st: _Stage) -> int:
    cfg = st.cfg
    t0 = time.perf_counter()
    runs = dissipative_runs(cfg, jobs=st.args.jobs)
    rows = []
    for run in runs:
        tag = _omega_tag(run.omega)
        run.save(st.out / "simulate" / f"omega_{tag}.npz")
        p = cfg.problem.with_omega(run.omega)
        tau = run.times - run.times[0]
        h1 = np.sqrt(run.l2_sq + run.grad_sq)
        write_table(st.out / "simulate" / f"omega_{tag}.tsv", {
            "time": run.times,
            "l2_sq_max": run.l2_sq.max(axis=0),
            "l2_sq_mean": run.l2_sq.mean(axis=0),
            "l2_bound": l2_bound(p, run.l2_sq[:, 0].max(), tau),
            "h1_max": h1.max(axis=0),
            "tail_ratio_max": (run.tail / run.l2_sq).max(axis=0),
        }, st.meta(omega=run.omega, members=len(run.seeds), step=run.step,
                   tail_time=run.tail_time, **run.meta))
        rows.append({"omega": run.omega, "members": len(run.seeds), "samples": len(run.times),
                     "t_end": float(run.times[-1]), "step": run.step,
                     "tail_time": run.tail_time})
        st.echo(f"omega={run.omega:g}: {len(run.seeds)} runs to t={run.times[-1]:.2f}, "
                f"h={run.step:.4g}")
    st.write_json("simulate", {"runs": rows, "seconds": time.perf_counter() - t0})
    return EXIT_OK


def _load_runs(st: _Stage) -> list:
    runs = []
    for w in st.cfg.omegas:
        path = st.out / "simulate" / f"omega_{_omega_tag(w)}.npz"
        if not path.exists():
            raise DependencyError(f"{path} not found; run 'rdavg simulate' first")
        runs.append(DissipativeRun.load(path))
    return runs


def cmd_verify_bounds(st: _Stage) -> int:
    ctx = AcceptanceContext(st.cfg, jobs=st.args.jobs)
    ctx.dissipative = _load_runs(st)
    checks = ctx.bound_checks
    keys = [k for k in checks[0] if k not in ("omega",)]
    write_table(st.out / "bounds.tsv",
                {"omega": [c["omega"] for c in checks], **{k: [c[k] for c in checks] for k in keys}},
                st.meta(**absorbing_constants(st.cfg.problem)))
    results = [CRITERIA[3](ctx), CRITERIA[4](ctx)]
    for r in results:
        st.echo(r.line())
    ok = all(r.passed for r in results)
    st.write_json("verify-bounds", {"passed": ok, "checks": checks,
                                    "criteria": [r.to_dict() for r in results]})
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_averaging(st: _Stage) -> int:
    ctx = AcceptanceContext(st.cfg, jobs=st.args.jobs)
    d = st.out / "averaging"
    results = [CRITERIA[6](ctx), CRITERIA[7](ctx), CRITERIA[8](ctx)]
    gap, layer = ctx.linear
    traj, zero = ctx.trajectory
    meta = st.meta()
    for name, curve in (("linear_gap", gap), ("initial_layer", layer),
                        ("trajectory_gap", traj), ("trajectory_gap_delta0", zero)):
        curve.context = {**meta, **curve.context}
        curve.write_tsv(d / f"{name}.tsv")
    G = ctx.g_functionals
    write_table(d / "g_functionals.tsv",
                {"omega": G.omegas, **{f"G{j}_sup": G.sups[j] for j in (1, 2, 3)},
                 "ibp_difference": [b["difference"] for b in G.by_parts]},
                {**meta, "nemitski_ratio": G.nemitski_ratio})
    for r in results:
        st.echo(r.line())
    ok = all(r.passed for r in results)
    st.write_json("averaging", {"passed": ok, "criteria": [r.to_dict() for r in results]})
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_attractor(st: _Stage) -> int:
    ctx = AcceptanceContext(st.cfg, jobs=st.args.jobs, keep_clouds=True)
    r = CRITERIA[9](ctx)
    res = ctx.usc
    d = st.out / "attractor"
    write_table(d / "distances.tsv", res.to_table(), st.meta(attractor=st.cfg.attractor))
    manifests = {}
    for key, cloud in res.clouds.items():
        stem = "averaged" if key == "averaged" else f"omega_{_omega_tag(key)}"
        index, snaps = cloud.write_manifest(d / "clouds", stem)
        manifests[stem] = {"index": str(index.relative_to(st.out)),
                           "snapshots": str(snaps.relative_to(st.out)), "points": len(cloud)}
    st.echo(r.line())
    st.write_json("attractor", {"passed": r.passed, "criteria": [r.to_dict()],
                                "clouds": manifests})
    return EXIT_OK if r.passed else EXIT_CHECK_FAILED


def cmd_acceptance(st: _Stage) -> int:
    ctx = AcceptanceContext(st.cfg, jobs=st.args.jobs)
    only = st.args.only or list(CRITERIA)
    results, seconds = [], []
    for i in only:
        t0 = time.perf_counter()
        r = CRITERIA[i](ctx)
        seconds.append(time.perf_counter() - t0)
        results.append(r)
        st.echo(r.line())
    write_table(st.out / "acceptance.tsv",
                {"criterion": [r.number for r in results], "passed": [r.passed for r in results],
                 "seconds": seconds, "title": [r.title for r in results]}, st.meta())
    ok = all(r.passed for r in results)
    st.write_json("acceptance", {"passed": ok, "criteria": [r.to_dict() for r in results],
                                 "seconds": dict(zip(only, seconds))})
    st.echo(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_report(st: _Stage) -> int:
    summary = write_summary(st.out, figures=not st.args.no_figures)
    for stage, sec in summary["sections"].items():
        if sec.get("status") == "missing":
            st.echo(f"{stage:14s} MISSING")
        else:
            verdict = sec.get("passed")
            st.echo(f"{stage:14s} {'PASS' if verdict else 'FAIL' if verdict is False else 'done'}")
    for f in summary["figures"]:
        st.echo(f"figure: {f}")
    st.echo(f"summary: {st.out / 'summary.json'}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "verify-bounds": cmd_verify_bounds,
    "averaging": cmd_averaging,
    "attractor": cmd_attractor,
    "acceptance": cmd_acceptance,
    "report": cmd_report,
}


def _omega_list(text: str) -> list:
    try:
        vals = [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad omega list '{text}'") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty omega list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config merged over the defaults")
    common.add_argument("--out", metavar="DIR", help="output directory (default $RDAVG_OUT)")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
    common.add_argument("--seed", type=int, metavar="S", help="first seed of the ensemble")
    common.add_argument("--omega-list", type=_omega_list, metavar="W1,W2,...",
                        help="omega values for this stage")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="rdavg", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"rdavg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=COMMANDS[name].__name__[4:])
        if name == "acceptance":
            sp.add_argument("--only", type=int, nargs="+", choices=sorted(CRITERIA),
                            help="run only these criteria")
        if name == "report":
            sp.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        st = _Stage(args)
        return COMMANDS[args.command](st)
    except RdavgError as exc:
        print(f"rdavg: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"rdavg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
