"""Quasi-periodic coefficients, hull translates and hypothesis certification.

Every time-dependent coefficient is a finite trigonometric sum

    q(tau) = mean + sum_m c_m cos(nu_m tau + phi_m),

which is almost periodic with mean value ``mean``.  Translates along the hull
are phase shifts, and the time primitives used by the propagators are closed
form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .spectral import GridSpec, SpectralField, norm_l2, to_physical

__all__ = [
    "QuasiPeriodicScalar",
    "QuasiPeriodicMatrix",
    "NonlinearitySpec",
    "ForcingSpec",
    "ProblemSpec",
    "translate",
    "mean_value",
    "primitive",
    "mu_bound",
    "check_hypotheses",
    "default_profiles",
]


@dataclass(frozen=True)
class QuasiPeriodicScalar:
    mean: float
    terms: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        terms = tuple((float(c), float(nu), float(phi)) for c, nu, phi in self.terms)
        for c, nu, phi in terms:
            if not (np.isfinite(c) and np.isfinite(nu) and np.isfinite(phi)):
                raise ConfigurationError(f"non-finite term {(c, nu, phi)}")
            if nu < 0:
                raise ConfigurationError(f"term frequency must be >= 0, got {nu}")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "terms", terms)

    @classmethod
    def constant(cls, value: float) -> "QuasiPeriodicScalar":
        return cls(value, ())

    @classmethod
    def cosine(cls, mean, amplitude, frequency=1.0, phase=0.0) -> "QuasiPeriodicScalar":
        return cls(mean, ((amplitude, frequency, phase),) if amplitude else ())

    @property
    def amplitude(self) -> float:
        """Total amplitude sum |c_m|; also sup of the envelope mu."""
        return float(sum(abs(c) for c, _, _ in self.terms))

    @property
    def bound(self) -> float:
        return abs(self.mean) + self.amplitude

    @property
    def lower(self) -> float:
        """Certified lower bound mean - sum |c_m|."""
        return self.mean - self.amplitude

    @property
    def upper(self) -> float:
        return self.mean + self.amplitude

    @property
    def max_frequency(self) -> float:
        return max((nu for c, nu, _ in self.terms if c != 0), default=0.0)

    def value(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = np.full(tau.shape, self.mean)
        for c, nu, phi in self.terms:
            out = out + c * np.cos(nu * tau + phi)
        return out if out.ndim else float(out)

    def shifted(self, tau_shift: float) -> "QuasiPeriodicScalar":
        """q(. + tau_shift) as a new sum with shifted phases."""
        return QuasiPeriodicScalar(
            self.mean, tuple((c, nu, phi + nu * tau_shift) for c, nu, phi in self.terms)
        )

    def averaged(self) -> "QuasiPeriodicScalar":
        return QuasiPeriodicScalar(self.mean_value(), ())

    def mean_value(self) -> float:
        for c, nu, _ in self.terms:
            if nu == 0:
                raise ConfigurationError(
                    "zero-frequency term present; fold it into the mean instead"
                )
        return self.mean

    def primitive(self, s, t, omega: float, offset=0.0):
        """Closed form of int_s^t q(omega p + offset) dp (broadcasts)."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        offset = np.asarray(offset, dtype=float)
        out = self.mean * (t - s) + 0.0 * offset
        for c, nu, phi in self.terms:
            if nu == 0:
                out = out + c * np.cos(phi) * (t - s)
                continue
            w = nu * omega
            # sin(a) - sin(b) = 2 cos((a+b)/2) sin((a-b)/2) avoids cancellation
            mid = 0.5 * w * (t + s) + nu * offset + phi
            out = out + (2.0 * c / w) * np.cos(mid) * np.sin(0.5 * w * (t - s))
        return out if out.ndim else float(out)

    def mu_bound(self, T) -> np.ndarray | float:
        """Nonincreasing envelope of sup_s |(1/T) int_s^{s+T} (q - mean)|."""
        T = np.asarray(T, dtype=float)
        if np.any(T <= 0):
            raise ConfigurationError("mu_bound needs T > 0")
        self.mean_value()
        total = self.amplitude
        decay = sum(2.0 * abs(c) / nu for c, nu, _ in self.terms) / T
        out = np.minimum(total, decay)
        return out if out.ndim else float(out)

    def deviation_bound(self, tau_shift: float) -> float:
        """Upper bound of sup_tau |q(tau + tau_shift) - q(tau)| (exact for one term)."""
        return float(
            sum(2.0 * abs(c * np.sin(0.5 * nu * tau_shift)) for c, nu, _ in self.terms)
        )

    def to_dict(self) -> dict:
        return {"mean": self.mean, "terms": [list(t) for t in self.terms]}

    @classmethod
    def from_dict(cls, d) -> "QuasiPeriodicScalar":
        if isinstance(d, (int, float)):
            return cls.constant(d)
        return cls(d["mean"], tuple(tuple(t) for t in d.get("terms", ())))


def mean_value(q: QuasiPeriodicScalar) -> float:
    return q.mean_value()


def primitive(q: QuasiPeriodicScalar, s: float, t: float, omega: float) -> float:
    if t < s:
        raise ConfigurationError(f"primitive needs t >= s, got s={s}, t={t}")
    if not omega > 0:
        raise ConfigurationError(f"omega must be positive, got {omega}")
    return q.primitive(s, t, omega)


def mu_bound(q: QuasiPeriodicScalar, T: float) -> float:
    return q.mu_bound(T)


@dataclass(frozen=True)
class QuasiPeriodicMatrix:
    """Symmetric matrix of quasi-periodic entries, stored for i <= j."""

    dim: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError(f"matrix dimension must be 1 or 2, got {self.dim}")
        full = {}
        for i, j in itertools.combinations_with_replacement(range(self.dim), 2):
            q = self.entries.get((i, j), self.entries.get((j, i)))
            if q is None:
                q = QuasiPeriodicScalar.constant(0.0)
            full[(i, j)] = q
        object.__setattr__(self, "entries", full)

    def __hash__(self):
        return hash((self.dim, tuple(sorted(self.entries.items()))))

    @classmethod
    def isotropic(cls, dim: int, q: QuasiPeriodicScalar) -> "QuasiPeriodicMatrix":
        zero = QuasiPeriodicScalar.constant(0.0)
        return cls(dim, {(i, j): (q if i == j else zero)
                         for i, j in itertools.combinations_with_replacement(range(dim), 2)})

    def entry(self, i, j) -> QuasiPeriodicScalar:
        return self.entries[(min(i, j), max(i, j))]

    def _assemble(self, fn):
        rows = [[fn(self.entry(i, j)) for j in range(self.dim)] for i in range(self.dim)]
        return np.array(rows, dtype=float)

    def value(self, tau: float) -> np.ndarray:
        return self._assemble(lambda q: q.value(tau))

    def mean_matrix(self) -> np.ndarray:
        return self._assemble(lambda q: q.mean_value())

    def amplitude_matrix(self) -> np.ndarray:
        return self._assemble(lambda q: q.amplitude)

    @property
    def slack(self) -> float:
        """Frobenius bound on the spectral norm of a(tau) - mean, for every tau."""
        return float(np.sqrt(np.sum(self.amplitude_matrix() ** 2)))

    @property
    def nu0(self) -> float:
        return float(np.linalg.eigvalsh(self.mean_matrix())[0] - self.slack)

    @property
    def nu1(self) -> float:
        return float(np.linalg.eigvalsh(self.mean_matrix())[-1] + self.slack)

    @property
    def mu_infinity(self) -> float:
        return max(q.amplitude for q in self.entries.values())

    @property
    def max_frequency(self) -> float:
        return max(q.max_frequency for q in self.entries.values())

    def mu_bound(self, T):
        """Entrywise envelope: max_ij mu_ij(T)."""
        return np.max([np.asarray(q.mu_bound(T)) for q in self.entries.values()], axis=0)

    def shifted(self, tau_shift: float) -> "QuasiPeriodicMatrix":
        return QuasiPeriodicMatrix(
            self.dim, {k: q.shifted(tau_shift) for k, q in self.entries.items()}
        )

    def averaged(self) -> "QuasiPeriodicMatrix":
        return QuasiPeriodicMatrix(self.dim, {k: q.averaged() for k, q in self.entries.items()})

    def primitives(self, s, t, omega, offset=0.0) -> dict:
        """{(i, j): int_s^t a_ij(omega p + offset) dp} for stored entries."""
        return {k: q.primitive(s, t, omega, offset) for k, q in self.entries.items()}

    def quadratic_form(self, integrals: dict, xi: tuple[np.ndarray, ...]):
        """sum_ij I_ij xi_i xi_j, with I from ``primitives``; batch axes lead."""
        out = 0.0
        for (i, j), val in integrals.items():
            v = np.asarray(val, dtype=float)
            v = v.reshape(v.shape + (1,) * xi[0].ndim)
            out = out + (1.0 if i == j else 2.0) * v * xi[i] * xi[j]
        return out

    def translate_distance(self, tau_shift: float) -> float:
        """Bound on sup_tau ||a(tau + shift) - a(tau)||_2 (exact for 1x1, one term)."""
        d = self._assemble(lambda q: q.deviation_bound(tau_shift))
        return float(np.sqrt(np.sum(d**2))) if self.dim > 1 else float(d[0, 0])

    def to_dict(self) -> dict:
        return {"dim": self.dim,
                "entries": {f"{i}{j}": q.to_dict() for (i, j), q in self.entries.items()}}

    @classmethod
    def from_dict(cls, d) -> "QuasiPeriodicMatrix":
        dim = int(d["dim"])
        entries = {}
        for key, val in d["entries"].items():
            i, j = int(key[0]), int(key[1])
            entries[(i, j)] = QuasiPeriodicScalar.from_dict(val)
        return cls(dim, entries)


@dataclass(frozen=True)
class NonlinearitySpec:
    """Cubic damping f(tau, u) = -b(tau) u^3 (growth exponent beta = 2)."""

    b: QuasiPeriodicScalar
    lipschitz: float = 0.0
    beta: int = 2

    def __post_init__(self):
        if self.beta != 2:
            raise ConfigurationError("only the cubic nonlinearity (beta = 2) is supported")
        if not self.b.lower > 0:
            raise ConfigurationError(
                f"b must stay positive: certified minimum {self.b.lower:.6g} <= 0"
            )
        if self.lipschitz < 0:
            raise ConfigurationError("Lipschitz cap L must be >= 0")

    @property
    def b_min(self) -> float:
        return self.b.lower

    def f(self, tau, u):
        return -np.asarray(self.b.value(tau)) * np.asarray(u) ** 3

    def f_u(self, tau, u):
        return -3.0 * self.b.value(tau) * u**2

    def shifted(self, tau_shift) -> "NonlinearitySpec":
        return replace(self, b=self.b.shifted(tau_shift))

    def averaged(self) -> "NonlinearitySpec":
        return replace(self, b=self.b.averaged())


@dataclass(frozen=True, eq=False)
class ForcingSpec:
    """g(tau, .) = g_A + cos(nu_g tau + phi_g) g_B."""

    g_A: SpectralField
    g_B: SpectralField
    frequency: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if self.g_A.grid != self.g_B.grid:
            raise ConfigurationError("forcing profiles live on different grids")
        if not self.frequency > 0:
            raise ConfigurationError(f"forcing frequency must be positive, got {self.frequency}")

    @property
    def time_factor(self) -> QuasiPeriodicScalar:
        if not np.any(self.g_B.coeffs):
            return QuasiPeriodicScalar.constant(0.0)
        return QuasiPeriodicScalar(0.0, ((1.0, self.frequency, self.phase),))

    @property
    def bound(self) -> float:
        """C_g = ||g_A|| + ||g_B|| >= ||g(tau)||_L2 for every tau."""
        return norm_l2(self.g_A) + norm_l2(self.g_B)

    def holder_modulus(self) -> np.ndarray:
        """g0(x) = |g_B(x)| nu_g (Lipschitz, hence Holder, modulus in tau)."""
        return np.abs(to_physical(self.g_B)) * self.frequency

    def at(self, tau: float) -> SpectralField:
        return self.g_A + self.g_B * self.time_factor.value(tau)

    def shifted(self, tau_shift) -> "ForcingSpec":
        return replace(self, phase=self.phase + self.frequency * tau_shift)

    def averaged(self) -> "ForcingSpec":
        return replace(self, g_B=SpectralField.zeros(self.g_B.grid))


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One hull element sigma together with the oscillation rate omega."""

    grid: GridSpec
    A: QuasiPeriodicMatrix
    a0: QuasiPeriodicScalar
    nonlin: NonlinearitySpec
    forcing: ForcingSpec
    omega: float = 1.0
    hull_shift: float = 0.0

    def __post_init__(self):
        if self.A.dim != self.grid.dim:
            raise ConfigurationError(
                f"matrix dimension {self.A.dim} differs from grid dimension {self.grid.dim}"
            )
        if self.forcing.g_A.grid != self.grid:
            raise ConfigurationError("forcing profiles are not on the problem grid")
        if not self.omega > 0:
            raise ConfigurationError(f"omega must be positive, got {self.omega}")
        for name, q in self.scalars().items():
            q.mean_value()
        if not self.nu0 > 0:
            raise ConfigurationError(
                f"ellipticity fails: certified nu0 = {self.nu0:.6g} "
                f"(mean eigenvalue minus amplitude slack {self.A.slack:.6g})"
            )
        if not self.lambda0 > 0:
            raise ConfigurationError(
                f"dissipativity fails: certified lambda0 = min a0 = {self.lambda0:.6g}"
            )

    def scalars(self) -> dict:
        out = {f"a{i}{j}": q for (i, j), q in self.A.entries.items()}
        out.update(a0=self.a0, b=self.nonlin.b, g_time=self.forcing.time_factor)
        return out

    @property
    def nu0(self) -> float:
        return self.A.nu0

    @property
    def nu1(self) -> float:
        return self.A.nu1

    @property
    def lambda0(self) -> float:
        return self.a0.lower

    @property
    def C_g(self) -> float:
        return self.forcing.bound

    @property
    def L(self) -> float:
        return self.nonlin.lipschitz

    @property
    def C(self) -> float:
        """Common bound C of a0 and g."""
        return max(self.a0.bound, self.C_g)

    @property
    def max_frequency(self) -> float:
        return max(q.max_frequency for q in self.scalars().values())

    @property
    def mu_infinity(self) -> float:
        return self.A.mu_infinity

    def with_omega(self, omega: float) -> "ProblemSpec":
        return replace(self, omega=float(omega))

    def hull_translate(self, tau_shift: float) -> "ProblemSpec":
        """sigma(. + tau_shift): the hull element shifted in the fast variable."""
        return replace(
            self,
            A=self.A.shifted(tau_shift),
            a0=self.a0.shifted(tau_shift),
            nonlin=self.nonlin.shifted(tau_shift),
            forcing=self.forcing.shifted(tau_shift),
            hull_shift=self.hull_shift + tau_shift / self.omega,
        )

    def averaged(self) -> "ProblemSpec":
        return replace(
            self,
            A=self.A.averaged(),
            a0=self.a0.averaged(),
            nonlin=self.nonlin.averaged(),
            forcing=self.forcing.averaged(),
        )

    def constants(self) -> dict:
        return {
            "nu0": self.nu0,
            "nu1": self.nu1,
            "lambda0": self.lambda0,
            "C_g": self.C_g,
            "L": self.L,
            "b_min": self.nonlin.b_min,
            "mu_infinity": self.mu_infinity,
            "omega": self.omega,
            "hull_shift": self.hull_shift,
        }


def translate(p: ProblemSpec, h: float) -> ProblemSpec:
    """T_omega(h) sigma: every phase advances by nu_m * omega * h."""
    return p.hull_translate(p.omega * h)


def check_hypotheses(p: ProblemSpec, n_tau: int = 2001, u_max: float = 10.0) -> dict:
    """Direct evaluation of the standing hypotheses on a tau-grid.

    Returns ``{name: (passed, measured, bound)}``.  The certified constants
    hold for all tau; the grid sweep is an independent sanity check.
    """
    periods = [2 * np.pi / nu for q in p.scalars().values() for _, nu, _ in q.terms if nu > 0]
    span = 4 * max(periods, default=2 * np.pi)
    tau = np.linspace(0.0, span, n_tau)
    out = {}
    sym = all(np.allclose(p.A.value(t), p.A.value(t).T) for t in tau[:: max(1, n_tau // 50)])
    out["symmetry"] = (sym, 0.0, 0.0)
    eig = np.array([np.linalg.eigvalsh(p.A.value(t)) for t in tau])
    out["ellipticity_lower"] = (bool(eig[:, 0].min() >= p.nu0 - 1e-12), float(eig[:, 0].min()), p.nu0)
    out["ellipticity_upper"] = (bool(eig[:, -1].max() <= p.nu1 + 1e-12), float(eig[:, -1].max()), p.nu1)
    a0 = p.a0.value(tau)
    out["a0_lower"] = (bool(a0.min() >= p.lambda0 - 1e-12), float(a0.min()), p.lambda0)
    u = np.linspace(-u_max, u_max, 401)
    T, U = np.meshgrid(tau[::20], u, indexing="ij")
    fvals = -p.nonlin.b.value(T) * U**3
    out["f_zero"] = (bool(np.all(-p.nonlin.b.value(tau) * 0.0 == 0.0)), 0.0, 0.0)
    fu = float(np.max(fvals * U))
    out["f_times_u_nonpositive"] = (fu <= 0.0, fu, 0.0)
    fuu = float(np.max(-3.0 * p.nonlin.b.value(T) * U**2))
    out["f_u_below_L"] = (fuu <= p.L, fuu, p.L)
    gt = p.forcing.time_factor.value(tau[:: max(1, n_tau // 200)])
    gnorm = max(norm_l2(p.forcing.g_A + p.forcing.g_B * float(s)) for s in np.atleast_1d(gt))
    out["forcing_bound"] = (gnorm <= p.C_g * (1 + 1e-12), gnorm, p.C_g)
    return out


def default_profiles(grid: GridSpec, amplitude_A=2.0, amplitude_B=1.0, width=1.0):
    """Gaussian forcing profiles used by the shipped configuration."""
    r2 = sum(x * x for x in grid.points)
    gA = SpectralField.from_function(grid, lambda *x: amplitude_A * np.exp(-r2 / (2 * width**2)))
    gB = SpectralField.from_function(grid, lambda *x: amplitude_B * np.exp(-r2 / (2 * width**2)))
    return gA.dealiased(), gB.dealiased()
