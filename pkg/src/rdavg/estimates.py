"""Explicit dissipative estimates: L2 / H1 a-priori bounds, absorbing set, tails.

All constants follow from the certified data of a ``ProblemSpec``
(``nu0``, ``lambda0``, ``C_g``, ``L``) and are independent of ``omega`` and of
the hull element.
"""

from __future__ import annotations

import numpy as np

from .coefficients import ProblemSpec
from .errors import DomainError

__all__ = [
    "l2_bound",
    "grad_bound",
    "absorbing_constants",
    "absorbing_time",
    "tail_time",
    "energy_rate_excess",
    "sobolev_constant",
]


def l2_bound(p: ProblemSpec, l2_sq_initial, tau):
    """||u(t)||^2 <= e^(-lambda0 tau) ||u_s||^2 + C_g^2 / lambda0^2."""
    lam = p.lambda0
    return np.exp(-lam * np.asarray(tau)) * l2_sq_initial + p.C_g**2 / lam**2


def grad_bound(p: ProblemSpec, l2_sq_initial, grad_sq_initial, tau):
    """Explicit bound on ||grad u(t)||^2 from the H1 energy inequality."""
    lam, nu, L, C = p.lambda0, p.nu0, p.L, p.C_g
    tau = np.asarray(tau)
    return (np.exp(-2 * lam * tau) * grad_sq_initial
            + (L**2 / (nu * lam)) * l2_sq_initial * np.exp(-lam * tau)
            + (L**2 / (2 * nu * lam**3) + 1.0 / (lam * nu)) * C**2)


def absorbing_constants(p: ProblemSpec) -> dict:
    """K1, K2 with ||u(t)||_H1^2 <= K1 R^2 e^(-lambda0 tau) + K2, and K = sqrt(2 K2).

    Without forcing K2 = 0 and only balls of positive radius absorb; the
    unit ball is used then (K = 1).
    """
    lam, nu, L, C = p.lambda0, p.nu0, p.L, p.C_g
    K1 = 2.0 + L**2 / (nu * lam)
    K2 = C**2 / lam**2 + (L**2 / (2 * nu * lam**3) + 1.0 / (lam * nu)) * C**2
    K = float(np.sqrt(2.0 * K2)) if K2 > 0 else 1.0
    return {"K1": K1, "K2": K2, "K": K}


def absorbing_time(p: ProblemSpec, R: float) -> float:
    """T(R) after which every trajectory from the H1-ball of radius R stays below K."""
    if R < 0:
        raise DomainError(f"R must be >= 0, got {R}")
    c = absorbing_constants(p)
    if R == 0:
        return 0.0
    return max(0.0, float(np.log(2.0 * c["K1"] * R**2 / c["K"] ** 2) / p.lambda0))


def tail_time(p: ProblemSpec, R: float, eta: float) -> float:
    """T_bar(R) = T(R) + lambda0^-1 log((K^2 + 4/lambda0) / eta).

    The tail estimate bounds the mass beyond the cut-off radius by
    ``(K^2 + 4/lambda0) * eta'`` once ``t - s >= T(R) + log(1/eta')/lambda0``;
    this returns the time at which that bound drops to ``eta``.
    """
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    K = absorbing_constants(p)["K"]
    scale = K**2 + 4.0 / p.lambda0
    return absorbing_time(p, R) + max(0.0, float(np.log(scale / eta) / p.lambda0))


def energy_rate_excess(p: ProblemSpec, times, l2_sq) -> np.ndarray:
    """Secant slope of ||u||^2 minus its bound -lambda0 min||u||^2 + C_g^2/lambda0.

    Positive entries (beyond a tolerance) violate the L2 differential inequality.
    """
    times = np.asarray(times, dtype=float)
    l2_sq = np.asarray(l2_sq, dtype=float)
    dt = np.diff(times)
    slope = np.diff(l2_sq, axis=-1) / dt
    low = np.minimum(l2_sq[..., 1:], l2_sq[..., :-1])
    return slope - (-p.lambda0 * low + p.C_g**2 / p.lambda0)


def sobolev_constant(layout) -> float:
    """Discrete S with ||u||_inf <= S ||u||_H1 on the kept modes.

    Cauchy-Schwarz over the Fourier sum gives S^2 = (2l)^-dim sum (1 + |xi|^2)^-1.
    """
    w = layout.weights / (1.0 + layout.xi2)
    return float(np.sqrt(np.sum(w) / layout.grid.volume))
