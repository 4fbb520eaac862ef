"""Fourier-multiplier form of the oscillatory linear process and its averaged limit.

The principal part is diagonal in Fourier space: mode ``k`` is multiplied by
``exp(-E_k(s, t))`` with ``E_k(s, t) = sum_ij I_ij(s, t) xi_i xi_j`` and
``I_ij`` the closed-form primitive of ``a_ij(omega p)``.  Composition and
identity laws therefore hold up to rounding.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .coefficients import ProblemSpec, QuasiPeriodicMatrix
from .errors import ConfigurationError, DomainError
from .spectral import SpectralField, norm_h1, norm_l2

__all__ = [
    "exponent",
    "apply_U",
    "apply_avg",
    "rho",
    "chi",
    "smoothing_constant",
    "theta_constants",
    "theta_envelope",
    "theta_gap",
    "theta_bound",
    "shift_for_distance",
]


def exponent(p: ProblemSpec, s, t, offset=0.0) -> np.ndarray:
    """E_k(s, t) on the grid; leading axes follow any array-valued ``offset``."""
    integrals = p.A.primitives(s, t, p.omega, offset)
    return p.A.quadratic_form(integrals, p.grid.xi)


def _check(p: ProblemSpec, u: SpectralField):
    if u.grid != p.grid:
        raise ConfigurationError("field grid differs from problem grid")


def apply_U(p: ProblemSpec, s: float, t: float, u: SpectralField) -> SpectralField:
    _check(p, u)
    if t < s:
        raise ConfigurationError(f"apply_U needs t >= s, got s={s}, t={t}")
    if t == s:
        return u
    return SpectralField(p.grid, np.exp(-exponent(p, s, t)) * u.coeffs)


def apply_avg(p: ProblemSpec, t: float, u: SpectralField) -> SpectralField:
    _check(p, u)
    if t < 0:
        raise ConfigurationError(f"apply_avg needs t >= 0, got {t}")
    if t == 0:
        return u
    abar = p.A.mean_matrix()
    xi = p.grid.xi
    form = sum(abar[i, j] * xi[i] * xi[j] for i in range(p.grid.dim) for j in range(p.grid.dim))
    return SpectralField(p.grid, np.exp(-form * t) * u.coeffs)


def _check_q(q: float, nu0: float) -> float:
    if not nu0 > 0:
        raise DomainError(f"nu0 must be positive, got {nu0}")
    if not 0 <= q <= 8 * nu0**3:
        raise DomainError(f"q must lie in [0, 8 nu0^3] = [0, {8 * nu0**3:.6g}], got {q}")
    return float(q)


def rho(q: float, nu0: float) -> float:
    """L2 -> H1 modulus for two principal parts at sup-distance q."""
    q = _check_q(q, nu0)
    if q == 0:
        return 0.0
    k = q ** (-1.0 / 3.0)
    return float(np.sqrt(2.0) * q ** (-1.0 / 6.0) * np.exp(-nu0 * k)
                 + q ** (-1.0 / 6.0) * np.expm1(q ** (2.0 / 3.0)))


def chi(q: float, nu0: float) -> float:
    """H1 -> H1 modulus, same split with k = q^(-1/3)."""
    q = _check_q(q, nu0)
    if q == 0:
        return 0.0
    k = q ** (-1.0 / 3.0)
    return float(np.sqrt(2.0) * np.exp(-nu0 * k) + np.expm1(q ** (2.0 / 3.0)))


def smoothing_constant(nu0: float) -> float:
    """M with ||U(t,s)u||_H1 <= M (1 + (t-s)^(-1/2)) ||u||_L2 and M >= 1.

    sup_z (1 + z/(nu0 tau)) e^(-2z) <= 1 + 1/(2 e nu0 tau).
    """
    return max(1.0, 1.0 / np.sqrt(2.0 * np.e * nu0))


def theta_constants(A: QuasiPeriodicMatrix) -> dict:
    """kappa, mu1, mu2 of the theta envelope, from the two-term split.

    With k = (mu_inf / mu)^(1/2) / (2 nu0) >= 1/(2 nu0) the high-frequency part
    is <= 2 (1 + 1/tau) max(1, k) e^(-2 nu0 k) and the low-frequency part is
    <= (1 + 1/tau) max(1, k) (N k mu e^(N k mu))^2; max(1, k) <= max(1, 2 nu0) k.
    """
    nu0 = A.nu0
    N = A.dim
    mu_inf = A.mu_infinity
    c = max(1.0, 2.0 * nu0)
    kappa = c * max(np.sqrt(mu_inf) / nu0, N**2 * mu_inf**1.5 / (8.0 * nu0**3))
    return {
        "kappa": float(kappa),
        "mu1": float(np.sqrt(mu_inf)),
        "mu2": float(N * np.sqrt(mu_inf) / nu0),
        "mu_infinity": float(mu_inf),
        "nu0": float(nu0),
    }


def theta_envelope(A: QuasiPeriodicMatrix, q) -> np.ndarray | float:
    """theta(q) = kappa^(1/2) (mu^(-1/2) e^(-mu1 mu^(-1/2)) + mu^(1/2) e^(mu2 mu^(1/2)))^(1/2).

    Nonincreasing in q because mu(q) is and the bracket increases with mu on
    (0, mu_inf]; zero when the principal part does not oscillate.
    """
    q = np.asarray(q, dtype=float)
    if A.mu_infinity == 0:
        out = np.zeros(q.shape)
        return out if out.ndim else 0.0
    c = theta_constants(A)
    mu = np.asarray(A.mu_bound(q), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(mu > 0, mu ** -0.5, np.inf)
        first = np.where(mu > 0, x * np.exp(-c["mu1"] * x), 0.0)
    second = np.sqrt(mu) * np.exp(c["mu2"] * np.sqrt(mu))
    out = np.sqrt(c["kappa"] * (first + second))
    return out if out.ndim else float(out)


def theta_gap(p: ProblemSpec, s: float, t: float, u: SpectralField) -> float:
    """Measured ||U(t,s)u - exp(-Abar (t-s)) u||_H1."""
    if not t > s:
        raise ConfigurationError(f"theta_gap needs t > s, got s={s}, t={t}")
    return norm_h1(apply_U(p, s, t, u) - apply_avg(p, t - s, u))


def theta_bound(p: ProblemSpec, s: float, t: float, u: SpectralField) -> float:
    """(1 + (t-s)^(-1/2)) theta(omega (t-s)) ||u||_L2."""
    tau = t - s
    return (1.0 + tau**-0.5) * theta_envelope(p.A, p.omega * tau) * norm_l2(u)


def shift_for_distance(A: QuasiPeriodicMatrix, q: float) -> float:
    """Hull shift (fast variable) whose translate sits at sup-distance q from A."""
    if q <= 0:
        return 0.0
    nu = A.max_frequency
    if nu == 0:
        raise ConfigurationError("principal part does not oscillate; translates coincide")
    hi = np.pi / nu
    if A.translate_distance(hi) < q:
        raise DomainError(f"distance {q} exceeds the largest translate distance")
    return float(brentq(lambda d: A.translate_distance(d) - q, 0.0, hi, xtol=1e-15, rtol=1e-15))
