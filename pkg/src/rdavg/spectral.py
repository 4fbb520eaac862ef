"""Periodic-box spectral representation of real fields on [-l, l]^dim.

Coefficient convention: for grid points ``x_j = -l + j * (2l / M)`` the stored
coefficient of mode ``k`` is

    u_hat[k] = M**(-dim) * sum_j u(x_j) * exp(-i xi_k . x_j),   xi_k = pi k / l,

so that ``u(x) = sum_k u_hat[k] exp(i xi_k . x)``.  Arrays are kept in numpy
FFT ordering.  With this normalisation

    ||u||_L2^2 = (2l)^dim * sum_k |u_hat[k]|^2
               = (2l/M)^dim * sum_j |u(x_j)|^2        (trapezoidal rule)
    ||u||_H1^2 = (2l)^dim * sum_k (1 + |xi_k|^2) |u_hat[k]|^2
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "GridSpec",
    "SpectralField",
    "to_physical",
    "to_spectral",
    "norm_l2",
    "norm_h1",
    "tail_mass",
    "inner",
    "random_field",
]


@dataclass(frozen=True)
class GridSpec:
    dim: int = 1
    half_width: float = 20.0
    modes_per_axis: int = 256
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError(f"dim must be 1 or 2, got {self.dim}")
        if not self.half_width > 0:
            raise ConfigurationError(f"half_width must be positive, got {self.half_width}")
        M = self.modes_per_axis
        if int(M) != M or M < 8 or M % 2:
            raise ConfigurationError(f"modes_per_axis must be an even integer >= 8, got {M}")
        if not 0 < self.dealias_fraction <= 1:
            raise ConfigurationError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.modes_per_axis,) * self.dim

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.modes_per_axis

    @property
    def volume(self) -> float:
        return (2.0 * self.half_width) ** self.dim

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Integer mode numbers k in FFT order, one axis."""
        return np.fft.fftfreq(self.modes_per_axis, d=1.0 / self.modes_per_axis).astype(int)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """xi_k = pi k / l along one axis, FFT order."""
        return np.pi * self.mode_index / self.half_width

    @cached_property
    def axis_points(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.modes_per_axis)

    @cached_property
    def points(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis_points] * self.dim), indexing="ij"))

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij"))

    @cached_property
    def xi2(self) -> np.ndarray:
        return sum(x * x for x in self.xi)

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x * x for x in self.points))

    @cached_property
    def phase(self) -> np.ndarray:
        """(-1)^(sum of mode indices): shift of the FFT origin to x = 0."""
        k = self.mode_index
        return np.prod(np.meshgrid(*([(-1.0) ** k] * self.dim), indexing="ij"), axis=0)

    @cached_property
    def kept_radius(self) -> int:
        """Largest |k| per axis retained by de-aliasing; the Nyquist mode is always dropped."""
        M = self.modes_per_axis
        return min(int(np.floor(self.dealias_fraction * M / 2)), M // 2 - 1)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.abs(self.mode_index) <= self.kept_radius
        grids = np.meshgrid(*([keep] * self.dim), indexing="ij")
        return np.logical_and.reduce(grids)

    @cached_property
    def conj_index(self) -> tuple[np.ndarray, ...]:
        """Index arrays mapping mode k to mode -k."""
        M = self.modes_per_axis
        rev = (-np.arange(M)) % M
        return np.ix_(*([rev] * self.dim))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "half_width": self.half_width,
            "modes_per_axis": self.modes_per_axis,
            "dealias_fraction": self.dealias_fraction,
        }


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable real field stored as its Fourier coefficients."""

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ConfigurationError(
                f"coefficient shape {c.shape} does not match grid shape {self.grid.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "SpectralField":
        return to_spectral(np.asarray(fn(*grid.points), dtype=float), grid)

    def physical(self) -> np.ndarray:
        return to_physical(self)

    def l2(self) -> float:
        return norm_l2(self)

    def h1(self) -> float:
        return norm_h1(self)

    def dirichlet_energy(self) -> float:
        """||grad u||^2 = (2l)^dim sum |xi|^2 |u_hat|^2."""
        return float(self.grid.volume * np.sum(self.grid.xi2 * np.abs(self.coeffs) ** 2))

    def hermitian_defect(self) -> float:
        c = self.coeffs
        return float(np.max(np.abs(c - np.conj(c[self.grid.conj_index]))))

    def dealiased(self) -> "SpectralField":
        return SpectralField(self.grid, np.where(self.grid.dealias_mask, self.coeffs, 0))

    def _check(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise ConfigurationError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)


def to_physical(f: SpectralField) -> np.ndarray:
    g = f.grid
    values = np.fft.ifftn(f.coeffs * g.phase) * g.modes_per_axis**g.dim
    return values.real


def to_spectral(values, grid: GridSpec) -> SpectralField:
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ConfigurationError(
            f"array shape {values.shape} does not match grid shape {grid.shape}"
        )
    if np.iscomplexobj(values):
        raise ConfigurationError("physical values must be real")
    c = np.fft.fftn(values) * grid.phase / grid.modes_per_axis**grid.dim
    return SpectralField(grid, c)


def norm_l2(f: SpectralField) -> float:
    return float(np.sqrt(f.grid.volume * np.sum(np.abs(f.coeffs) ** 2)))


def norm_h1(f: SpectralField) -> float:
    w = 1.0 + f.grid.xi2
    return float(np.sqrt(f.grid.volume * np.sum(w * np.abs(f.coeffs) ** 2)))


def inner(f: SpectralField, g: SpectralField) -> float:
    """Real L2 inner product <f, g>."""
    f._check(g)
    return float(f.grid.volume * np.real(np.vdot(f.coeffs, g.coeffs)))


def tail_mass(f: SpectralField, k_radius: float) -> float:
    """Discrete integral of |u|^2 over grid points with |x| > k_radius."""
    g = f.grid
    if not 0 < k_radius < g.half_width:
        raise DomainError(
            f"tail radius must lie in (0, {g.half_width}), got {k_radius}"
        )
    u = to_physical(f)
    outside = g.radius > k_radius
    return float(np.sum(u[outside] ** 2) * g.dx**g.dim)


def random_field(
    grid: GridSpec,
    rng: np.random.Generator,
    *,
    l2_norm: float = 1.0,
    smoothness: float = 1.0,
    envelope_width: float | None = 4.0,
) -> SpectralField:
    """Random real field with power-law spectrum (1+|xi|^2)^(-smoothness).

    With ``envelope_width`` set, the field is multiplied by a Gaussian window
    so it is spatially localised; the result is de-aliased and scaled to the
    requested L2 norm.
    """
    noise = rng.standard_normal(grid.shape)
    c = np.fft.fftn(noise) * grid.phase / grid.modes_per_axis**grid.dim
    c = c * (1.0 + grid.xi2) ** (-smoothness / 2)
    u = to_physical(SpectralField(grid, c))
    if envelope_width is not None:
        u = u * np.exp(-((grid.radius / envelope_width) ** 2))
    f = to_spectral(u, grid).dealiased()
    n = norm_l2(f)
    return f * (l2_norm / n) if n > 0 else f
