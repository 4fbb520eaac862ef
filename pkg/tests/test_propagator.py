import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rdavg.coefficients import translate
from rdavg.errors import ConfigurationError, DomainError
from rdavg.propagator import (apply_avg, apply_U, chi, rho, shift_for_distance,
                              smoothing_constant, theta_bound, theta_envelope, theta_gap)
from rdavg.spectral import SpectralField, norm_h1, norm_l2, random_field

from conftest import make_problem


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), s=st.floats(-3, 3), a=st.floats(0, 2), b=st.floats(0, 2),
       omega=st.floats(0.5, 64))
def test_cocycle_law(problem1, seed, s, a, b, omega):
    p = problem1.with_omega(omega)
    u = random_field(p.grid, np.random.default_rng(seed))
    two = apply_U(p, s + a, s + a + b, apply_U(p, s, s + a, u))
    one = apply_U(p, s, s + a + b, u)
    assert norm_h1(two - one) <= 1e-12 * norm_h1(one)


def test_identity_and_contractivity(problem1, rng):
    u = random_field(problem1.grid, rng)
    assert apply_U(problem1, 1.0, 1.0, u) is u
    v = apply_U(problem1, 0.0, 2.0, u)
    assert norm_l2(v) <= norm_l2(u)
    with pytest.raises(ConfigurationError):
        apply_U(problem1, 1.0, 0.5, u)


def test_constant_coefficients_give_heat_multiplier(grid1, rng):
    p = make_problem(grid1, amp=0.0)
    u = random_field(grid1, rng)
    t = 0.7
    out = apply_U(p, 0.3, 0.3 + t, u)
    expected = np.exp(-grid1.xi2 * t) * u.coeffs
    assert np.max(np.abs(out.coeffs - expected)) <= 1e-15
    assert norm_h1(apply_avg(p, t, u) - out) <= 1e-15


def test_translation_identity(problem1, rng):
    p = problem1.with_omega(5.0)
    u = random_field(p.grid, rng)
    h, s, t = 0.41, 0.2, 1.1
    lhs = apply_U(translate(p, h), s, t, u)
    rhs = apply_U(p, s + h, t + h, u)
    assert norm_h1(lhs - rhs) <= 1e-13 * norm_h1(rhs)


def test_rho_and_chi_moduli():
    nu0 = 0.5
    assert rho(0.0, nu0) == 0.0 and chi(0.0, nu0) == 0.0
    q = np.geomspace(1e-4, 8 * nu0**3, 40)
    r = np.array([rho(x, nu0) for x in q])
    assert np.all(r > 0)
    # small q: the exponential term is negligible and rho ~ q^(1/2)
    assert rho(1e-6, nu0) == pytest.approx(1e-3, rel=1e-4)
    assert chi(1e-6, nu0) == pytest.approx(1e-4, rel=1e-3)
    with pytest.raises(DomainError):
        rho(-1e-3, nu0)
    with pytest.raises(DomainError):
        rho(2.0, nu0)


def test_process_difference_respects_rho(problem1, rng):
    A = problem1.A
    for q in (1e-3, 1e-2, 1e-1):
        h = shift_for_distance(A, q)
        assert A.translate_distance(h) == pytest.approx(q, rel=1e-9)
        other = problem1.hull_translate(h)
        for _ in range(5):
            u = random_field(problem1.grid, rng, l2_norm=rng.uniform(0.5, 2))
            s, dt = rng.uniform(0, 3), rng.uniform(0.05, 2)
            diff = norm_h1(apply_U(problem1, s, s + dt, u) - apply_U(other, s, s + dt, u))
            assert diff <= (1 + dt**-0.5) * rho(q, A.nu0) * norm_l2(u)


def test_smoothing_constant_bounds_h1_gain(problem1, rng):
    M = smoothing_constant(problem1.nu0)
    u = random_field(problem1.grid, rng, smoothness=0.0, envelope_width=None)
    for dt in (0.01, 0.1, 1.0):
        assert norm_h1(apply_U(problem1, 0.0, dt, u)) <= M * (1 + dt**-0.5) * norm_l2(u)


def test_theta_envelope_dominates_measured_gap(problem1, rng):
    u = random_field(problem1.grid, rng)
    for omega in (1.0, 8.0, 64.0):
        p = problem1.with_omega(omega)
        for t in (0.1, 0.5, 2.0):
            assert theta_gap(p, 0.0, t, u) <= theta_bound(p, 0.0, t, u)
    env = theta_envelope(problem1.A, np.geomspace(0.1, 1e4, 50))
    assert np.all(np.diff(env) <= 1e-15)


def test_nonoscillating_principal_part(grid1, rng):
    p = make_problem(grid1, amp=0.0)
    assert theta_envelope(p.A, 3.0) == 0.0
    with pytest.raises(ConfigurationError):
        shift_for_distance(p.A, 0.1)
    assert norm_h1(apply_U(p, 0, 1, SpectralField.zeros(grid1))) == 0.0
