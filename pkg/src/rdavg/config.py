"""Experiment configuration: a versioned JSON document mapped onto dataclasses.

Top-level keys::

    schema_version  int, must equal SCHEMA_VERSION
    grid            {dim, half_width, modes_per_axis, dealias_fraction}
    problem         {diffusion, a0, b, lipschitz, forcing}
    scheme          {base_step, c_osc, order}
    sweeps          {omegas, hull_shifts, seeds, ensemble_radius}
    verification    {delta, T, tail_radius, tail_eta, band_gap, band_cloud, ...}
    attractor       {transient, window, sample_spacing, ensemble, hull_shifts, omegas}
    output          default output directory

Quasi-periodic coefficients are written ``{"mean": m, "terms": [[c, nu, phi], ...]}``.
``diffusion`` is either such a scalar (isotropic ``a_ij = q delta_ij``) or
``{"matrix": {"00": q, "01": q, "11": q}}``.  Forcing profiles are chosen by
name: ``gaussian``, ``sech`` or ``zero``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coefficients import (ForcingSpec, NonlinearitySpec, ProblemSpec, QuasiPeriodicMatrix,
                           QuasiPeriodicScalar)
from .dynamics import SchemeConfig
from .errors import ConfigurationError
from .spectral import GridSpec, SpectralField, to_spectral

__all__ = ["SCHEMA_VERSION", "DEFAULT_CONFIG", "ExperimentConfig", "load_config", "forcing_profiles"]

SCHEMA_VERSION = 1

DEFAULT_CONFIG: dict = {
    "schema_version": SCHEMA_VERSION,
    "grid": {"dim": 1, "half_width": 20.0, "modes_per_axis": 256, "dealias_fraction": 2.0 / 3.0},
    "problem": {
        "diffusion": {"mean": 1.0, "terms": [[0.5, 1.0, 0.0]]},
        "a0": {"mean": 1.0, "terms": [[0.5, 1.0, 0.5]]},
        "b": {"mean": 1.0, "terms": [[0.5, 1.0, 1.0]]},
        "lipschitz": 0.0,
        "forcing": {"profile": "gaussian", "amplitude_A": 2.0, "amplitude_B": 1.0,
                    "width": 1.0, "frequency": 1.0, "phase": 0.0},
    },
    "scheme": {"base_step": 0.01, "c_osc": 0.2, "order": 2},
    "sweeps": {
        "omegas": [1, 8, 64],
        "hull_shifts": 5,
        "seeds": list(range(20)),
        "ensemble_radius": 4.0,
        "smoothness": 2.0,
    },
    "verification": {
        "delta": 0.1,
        "T": 2.0,
        "tail_radius": 10.0,
        "tail_eta": 1e-6,
        "band_gap": 0.10,
        "band_cloud": 0.15,
        "linear_omegas": [1, 2, 4, 8, 16, 32, 64, 128],
        "trajectory_omegas": [2, 4, 8, 16, 32, 64],
        "g_omegas": [4, 8, 16, 32, 64, 128],
        "scheme_tolerance_factor": 10.0,
    },
    "attractor": {
        "transient": 20.0,
        "window": 6.283185307179586,
        "sample_spacing": 0.2,
        "ensemble": 4,
        "hull_shifts": 8,
        "omegas": [1, 2, 4, 8, 16, 32, 64],
    },
    "output": "rdavg-out",
}


def _merge(base: dict, override: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in base:
            raise ConfigurationError(f"unknown config key '{path}{k}'")
        if isinstance(base[k], dict) and isinstance(v, dict) and k not in ("diffusion", "a0", "b"):
            out[k] = _merge(base[k], v, f"{path}{k}.")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _scalar(d, where: str) -> QuasiPeriodicScalar:
    try:
        return QuasiPeriodicScalar.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise ConfigurationError(f"{where}: {exc}") from exc
        raise ConfigurationError(f"{where}: malformed coefficient {d!r}") from exc


def forcing_profiles(grid: GridSpec, spec: dict) -> tuple[SpectralField, SpectralField]:
    """(g_A, g_B) for a named radial profile, de-aliased."""
    name = spec.get("profile", "gaussian")
    r = grid.radius
    width = float(spec.get("width", 1.0))
    if not width > 0:
        raise ConfigurationError(f"forcing width must be positive, got {width}")
    if name == "gaussian":
        shape = np.exp(-(r**2) / (2 * width**2))
    elif name == "sech":
        shape = 1.0 / np.cosh(r / width)
    elif name == "zero":
        z = SpectralField.zeros(grid)
        return z, z
    else:
        raise ConfigurationError(f"unknown forcing profile '{name}' (gaussian, sech, zero)")
    gA = to_spectral(float(spec.get("amplitude_A", 0.0)) * shape, grid).dealiased()
    gB = to_spectral(float(spec.get("amplitude_B", 0.0)) * shape, grid).dealiased()
    return gA, gB


@dataclass(eq=False)
class ExperimentConfig:
    raw: dict
    grid: GridSpec = field(init=False)
    scheme: SchemeConfig = field(init=False)
    problem: ProblemSpec = field(init=False)

    def __post_init__(self):
        d = self.raw
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigurationError(
                f"schema_version must be {SCHEMA_VERSION}, got {d.get('schema_version')!r}"
            )
        try:
            self.grid = GridSpec(**d["grid"])
            self.scheme = SchemeConfig(**d["scheme"])
        except TypeError as exc:
            raise ConfigurationError(f"grid/scheme: {exc}") from exc
        self.problem = self._build_problem(d["problem"])
        self._check_sweeps()

    def _build_problem(self, pd: dict) -> ProblemSpec:
        dim = self.grid.dim
        diff = pd["diffusion"]
        if isinstance(diff, dict) and "matrix" in diff:
            entries = {}
            for key, val in diff["matrix"].items():
                if len(key) != 2 or not key.isdigit():
                    raise ConfigurationError(f"problem.diffusion.matrix: bad key '{key}'")
                entries[(int(key[0]), int(key[1]))] = _scalar(val, f"diffusion[{key}]")
            A = QuasiPeriodicMatrix(dim, entries)
        else:
            A = QuasiPeriodicMatrix.isotropic(dim, _scalar(diff, "problem.diffusion"))
        a0 = _scalar(pd["a0"], "problem.a0")
        b = _scalar(pd["b"], "problem.b")
        nonlin = NonlinearitySpec(b, lipschitz=float(pd.get("lipschitz", 0.0)))
        fs = pd["forcing"]
        gA, gB = forcing_profiles(self.grid, fs)
        forcing = ForcingSpec(gA, gB, frequency=float(fs.get("frequency", 1.0)),
                              phase=float(fs.get("phase", 0.0)))
        return ProblemSpec(self.grid, A, a0, nonlin, forcing)

    def _check_sweeps(self):
        om = self.omegas
        if not om or any(w <= 0 for w in om):
            raise ConfigurationError("sweeps.omegas must be a nonempty list of positive values")
        for name in ("linear_omegas", "trajectory_omegas", "g_omegas"):
            om = self.raw["verification"][name]
            if any(b <= a for a, b in zip(om, om[1:])) or any(w <= 0 for w in om):
                raise ConfigurationError(f"verification.{name} must be positive and increasing")
        v = self.raw["verification"]
        if not 0 < v["delta"] < v["T"]:
            raise ConfigurationError("verification: need 0 < delta < T")
        if not 0 < v["tail_radius"] < self.grid.half_width:
            raise ConfigurationError("verification.tail_radius must lie in (0, half_width)")
        if not v["tail_eta"] > 0:
            raise ConfigurationError("verification.tail_eta must be positive")
        if not self.raw["sweeps"]["ensemble_radius"] > 0:
            raise ConfigurationError("sweeps.ensemble_radius must be positive")

    # convenient views ------------------------------------------------------
    @property
    def omegas(self) -> list:
        return [float(w) for w in self.raw["sweeps"]["omegas"]]

    @property
    def seeds(self) -> list:
        return [int(s) for s in self.raw["sweeps"]["seeds"]]

    @staticmethod
    def _shifts(v) -> np.ndarray:
        if isinstance(v, int):
            return 2 * np.pi * np.arange(v) / v
        return np.asarray(v, dtype=float)

    @property
    def hull_shifts(self) -> np.ndarray:
        """Hull shifts in the fast variable; an integer n means n equispaced phases."""
        return self._shifts(self.raw["sweeps"]["hull_shifts"])

    @property
    def verification(self) -> dict:
        return self.raw["verification"]

    @property
    def attractor(self) -> dict:
        return self.raw["attractor"]

    def attractor_shifts(self) -> np.ndarray:
        return self._shifts(self.attractor["hull_shifts"])

    def with_overrides(self, **sections) -> "ExperimentConfig":
        return ExperimentConfig(_merge(self.raw, sections))

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2)

    def constants(self) -> dict:
        return self.problem.constants()


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Default config, optionally merged with a JSON file and then ``overrides``."""
    raw = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigurationError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigurationError("config root must be a JSON object")
        if user.get("schema_version") != SCHEMA_VERSION:
            raise ConfigurationError(
                f"schema_version must be {SCHEMA_VERSION}, got {user.get('schema_version')!r}"
            )
        raw = _merge(raw, user)
    if overrides:
        raw = _merge(raw, overrides)
    return ExperimentConfig(raw)
