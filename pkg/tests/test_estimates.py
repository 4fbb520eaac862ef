import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rdavg.dynamics import SchemeConfig, SpectralLayout, evolve_batch
from rdavg.errors import DomainError
from rdavg.estimates import (absorbing_constants, absorbing_time, energy_rate_excess, grad_bound,
                             l2_bound, sobolev_constant, tail_time)
from rdavg.spectral import GridSpec, random_field, to_physical

from conftest import make_problem


def test_absorbing_constants_reference_values(problem1):
    # nu0 = lambda0 = 1/2, L = 0, C_g = 3 pi^(1/4):
    # K1 = 2, K2 = C^2 (1/lambda^2 + 1/(lambda nu)) = 72 sqrt(pi), K = 12 pi^(1/4)
    c = absorbing_constants(problem1)
    assert c["K1"] == 2.0
    assert c["K2"] == pytest.approx(72 * np.sqrt(np.pi), rel=1e-12)
    assert c["K"] == pytest.approx(12 * np.pi**0.25, rel=1e-12)


def test_absorbing_and_tail_times(problem1):
    K2 = 72 * np.sqrt(np.pi)
    R = 20.0
    T = np.log(2 * R**2 / K2) / 0.5
    assert absorbing_time(problem1, R) == pytest.approx(T, rel=1e-12)
    assert absorbing_time(problem1, 1.0) == 0.0        # already inside the ball
    assert absorbing_time(problem1, 0.0) == 0.0
    Tbar = T + np.log((2 * K2 + 8.0) / 1e-6) / 0.5
    assert tail_time(problem1, R, 1e-6) == pytest.approx(Tbar, rel=1e-12)
    with pytest.raises(DomainError):
        tail_time(problem1, R, 0.0)
    with pytest.raises(DomainError):
        absorbing_time(problem1, -1.0)


def test_unforced_problem_uses_unit_ball(grid1):
    p = make_problem(grid1, forcing_A=0.0, forcing_B=0.0)
    c = absorbing_constants(p)
    assert c["K2"] == 0.0 and c["K"] == 1.0
    assert absorbing_time(p, 3.0) == pytest.approx(np.log(2 * 2 * 9.0) / 0.5)


def test_bounds_start_above_the_datum_and_decay_to_the_floor(problem1):
    tau = np.linspace(0, 200, 50)
    b = l2_bound(problem1, 10.0, tau)
    assert b[0] >= 10.0
    assert np.all(np.diff(b) <= 0)
    assert b[-1] == pytest.approx(problem1.C_g**2 / problem1.lambda0**2, rel=1e-12)
    g = grad_bound(problem1, 10.0, 4.0, tau)
    assert g[0] >= 4.0


def test_simulated_energy_respects_the_bounds(problem1, rng):
    p = problem1.with_omega(8.0)
    fields = [random_field(p.grid, rng, l2_norm=r) for r in (0.5, 3.0, 6.0)]
    run = evolve_batch(p, SchemeConfig(), 0.0, 6.0, fields, [0.0, 1.0, 2.0])
    tau = run.times
    l20, gr0 = run.l2_sq[:, :1], run.grad_sq[:, :1]
    assert np.all(run.l2_sq <= l2_bound(p, l20, tau) + 1e-9)
    assert np.all(run.grad_sq <= grad_bound(p, l20, gr0, tau) + 1e-9)
    assert np.all(energy_rate_excess(p, run.times, run.l2_sq) <= 1e-3)


def test_sobolev_constant_approaches_the_continuum_value():
    # Riemann sum of (2 pi)^-1 int_{|xi| <= xi_K} dxi / (1 + xi^2) = arctan(xi_K) / pi
    lay = SpectralLayout(GridSpec(1, 200.0, 4096, 1.0))
    xi_K = np.pi * lay.K / 200.0
    assert sobolev_constant(lay) ** 2 == pytest.approx(np.arctan(xi_K) / np.pi, rel=1e-3)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), smooth=st.floats(0.0, 2.0))
def test_sup_norm_is_controlled_by_h1(seed, smooth):
    grid = GridSpec(1, 8.0, 64)
    lay = SpectralLayout(grid)
    u = random_field(grid, np.random.default_rng(seed), smoothness=smooth)
    c = lay.pack([u])
    h1 = np.sqrt(lay.l2_sq(c)[0] + lay.grad_sq(c)[0])
    assert np.max(np.abs(to_physical(u))) <= sobolev_constant(lay) * h1 * (1 + 1e-12)
