import numpy as np
import pytest

from rdavg.averaging import (GapCurve, g3_by_parts, g_functionals, initial_layer_curve,
                             linear_gap, linear_gap_curve, nemitski_average_check,
                             trajectory_gap_curve)
from rdavg.dynamics import SchemeConfig, SpectralLayout
from rdavg.errors import ConfigurationError, DomainError
from rdavg.propagator import theta_gap
from rdavg.spectral import random_field

from conftest import make_problem


def test_linear_gap_agrees_with_pointwise_propagators(problem1, rng):
    u = random_field(problem1.grid, rng)
    p = problem1.with_omega(3.0)
    times = np.array([0.2, 0.7, 1.9])
    vec = linear_gap(p, u, 0.1, times)
    ref = [theta_gap(p, 0.1, t, u) for t in times]
    assert np.allclose(vec, ref, rtol=1e-12, atol=1e-16)


def test_linear_gap_curve_decays(problem1, rng):
    u = random_field(problem1.grid, rng, smoothness=2.0)
    curve = linear_gap_curve(problem1, u, 0.0, 0.1, 2.0, [1, 4, 16, 64])
    assert curve.nonincreasing(0.1)
    assert curve.ratio() < 0.2
    assert np.all(curve.gaps <= curve.context["ceiling"])


def test_initial_layer_does_not_vanish(problem1, rng):
    rough = random_field(problem1.grid, rng, smoothness=0.6, envelope_width=None)
    layer = initial_layer_curve(problem1, rough, 0.0, [1, 8, 64])
    assert np.all(layer.gaps >= 0.5 * layer.gaps[0])


def test_zero_amplitudes_give_zero_gaps(grid1, rng):
    p = make_problem(grid1, amp=0.0, a0_amp=0.0, b_amp=0.0, forcing_B=0.0)
    u = random_field(grid1, rng)
    curve = linear_gap_curve(p, u, 0.0, 0.1, 1.0, [1, 8])
    assert np.all(curve.gaps < 1e-14)
    G = g_functionals(p, 8.0, 0.0, 1.0, u)
    assert all(G.sup(j) == 0.0 for j in (1, 2, 3))
    assert nemitski_average_check(p, u, 8.0)["max_ratio"] == 0.0


def test_g1_matches_closed_form(problem1, rng):
    # a0 - abar0 = cos(omega p + 1/2) / 2 and v constant: per mode
    # G1(t) = v_k / 2 * Re[(e^{i(omega t + 1/2)} - e^{-lam (t-s)} e^{i(omega s + 1/2)}) / (lam + i omega)]
    omega, s, T = 16.0, 0.3, 1.5
    u = random_field(problem1.grid, rng)
    G = g_functionals(problem1, omega, s, T, u)
    lay = SpectralLayout(problem1.grid)
    lam = lay.xi2
    t = s + T
    z = (np.exp(1j * (omega * t + 0.5)) - np.exp(-lam * T) * np.exp(1j * (omega * s + 0.5)))
    exact = 0.5 * np.real(z / (lam + 1j * omega)) * lay.pack([u])[0]
    err = np.sqrt(lay.l2_sq(G.final[1] - exact) + lay.grad_sq(G.final[1] - exact))
    assert err < 1e-10


def test_g_functionals_decay_with_omega(problem1, rng):
    u = random_field(problem1.grid, rng, smoothness=2.0)
    sups = np.array([[g_functionals(problem1, w, 0.0, 2.0, u).sup(j) for j in (1, 2, 3)]
                     for w in (8.0, 16.0, 32.0)])
    assert np.all(sups[1:] / sups[:-1] <= 0.8)


@pytest.mark.parametrize("omega", [4.0, 32.0])
def test_integration_by_parts_identity(problem1, omega):
    r = g3_by_parts(problem1, omega, 0.0, 1.123)
    assert r["difference"] <= 1e-10 * max(1.0, r["direct"])


def test_trajectory_gap_is_small_for_fast_oscillation(problem1, rng):
    data = [random_field(problem1.grid, rng, l2_norm=1.0, smoothness=2.0)]
    curve = trajectory_gap_curve(problem1, data, 0.0, 0.1, 1.0, [2, 32], [0.0, np.pi],
                                 SchemeConfig())
    assert np.all(curve.tolerance < 0.1 * curve.raw)
    assert curve.gaps[1] < 0.5 * curve.gaps[0]


def test_gap_curve_validation():
    with pytest.raises(ConfigurationError):
        GapCurve([1, 1], [0.1, 0.2], "h1_sup")
    with pytest.raises(ConfigurationError):
        GapCurve([1, 2], [0.1, -0.2], "h1_sup")
    with pytest.raises(ConfigurationError):
        GapCurve([1, 2, 4], [0.1, 0.2], "h1_sup")
    c = GapCurve([1, 2, 4], [1.0, 1.05, 0.5], "h1_sup")
    assert c.nonincreasing(0.1) and not c.nonincreasing(0.01)
    assert c.ratio() == 0.5
    assert GapCurve([1, 2], [1e-17, 0.0], "x").floored(1e-12).ratio() == 0.0


def test_window_checks(problem1, rng):
    u = random_field(problem1.grid, rng)
    with pytest.raises(DomainError):
        linear_gap_curve(problem1, u, 0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        trajectory_gap_curve(problem1, u, 0.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        g_functionals(problem1, 4.0, 0.0, 0.0, u)
