import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from rdavg.coefficients import (QuasiPeriodicMatrix, QuasiPeriodicScalar, check_hypotheses,
                                primitive, translate)
from rdavg.errors import ConfigurationError

from conftest import make_problem

terms = st.lists(st.tuples(st.floats(-1, 1), st.floats(0.1, 5), st.floats(-np.pi, np.pi)),
                 min_size=0, max_size=3)


@settings(max_examples=60, deadline=None)
@given(mean=st.floats(-2, 2), terms=terms, s=st.floats(-5, 5), dt=st.floats(0, 4),
       omega=st.floats(0.1, 50))
def test_primitive_matches_quadrature(mean, terms, s, dt, omega):
    q = QuasiPeriodicScalar(mean, tuple(terms))
    ref, _ = quad(lambda p: q.value(omega * p), s, s + dt, limit=400, epsabs=1e-12, epsrel=1e-12)
    assert q.primitive(s, s + dt, omega) == pytest.approx(ref, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(terms=terms, T=st.floats(0.05, 30), s=st.floats(-10, 10))
def test_mu_bound_dominates_window_averages(terms, T, s):
    q = QuasiPeriodicScalar(0.7, tuple(terms))
    dev = abs(q.primitive(s, s + T, 1.0) / T - q.mean_value())
    assert dev <= q.mu_bound(T) + 1e-12


def test_mu_bound_is_nonincreasing():
    q = QuasiPeriodicScalar(1.0, ((0.5, 1.0, 0.0), (0.2, np.sqrt(2), 1.0)))
    T = np.geomspace(1e-3, 1e3, 200)
    mu = q.mu_bound(T)
    assert np.all(np.diff(mu) <= 0)
    assert mu[0] == pytest.approx(0.7)
    assert mu[-1] == pytest.approx(2 * (0.5 + 0.2 / np.sqrt(2)) / 1e3)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-1, 1), nu=st.floats(0.1, 4), phi=st.floats(-3, 3), h=st.floats(-5, 5))
def test_deviation_bound_is_exact_for_one_term(c, nu, phi, h):
    q = QuasiPeriodicScalar(1.0, ((c, nu, phi),))
    tau = np.linspace(0, 2 * np.pi / nu, 4001)
    measured = np.max(np.abs(q.value(tau + h) - q.value(tau)))
    assert measured <= q.deviation_bound(h) + 1e-12
    assert measured == pytest.approx(q.deviation_bound(h), abs=1e-5)


def test_certified_constants_of_the_reference_problem(grid1):
    p = make_problem(grid1)
    # a = 1 + cos/2, a0 = 1 + cos/2: nu0 = lambda0 = 1/2, nu1 = 3/2; ||g_A|| + ||g_B|| = 3 pi^(1/4)
    assert p.nu0 == pytest.approx(0.5)
    assert p.nu1 == pytest.approx(1.5)
    assert p.lambda0 == pytest.approx(0.5)
    assert p.C_g == pytest.approx(3 * np.pi**0.25, rel=1e-12)
    assert p.L == 0.0
    assert all(ok for ok, _, _ in check_hypotheses(p).values())


def test_matrix_slack_and_translate_distance():
    q01 = QuasiPeriodicScalar(0.2, ((0.1, 1.0, 0.0),))
    A = QuasiPeriodicMatrix(2, {(0, 0): QuasiPeriodicScalar.cosine(2.0, 0.3),
                                (0, 1): q01, (1, 1): QuasiPeriodicScalar.constant(1.5)})
    # Frobenius slack sqrt(0.3^2 + 2 * 0.1^2) bounds every spectral deviation
    assert A.slack == pytest.approx(np.sqrt(0.09 + 0.02))
    for tau in np.linspace(0, 7, 50):
        dev = np.linalg.norm(A.value(tau) - A.mean_matrix(), 2)
        assert dev <= A.slack + 1e-12
        eig = np.linalg.eigvalsh(A.value(tau))
        assert A.nu0 <= eig[0] + 1e-12 and eig[-1] <= A.nu1 + 1e-12
    h = 0.8
    tau = np.linspace(0, 2 * np.pi, 2001)
    meas = max(np.linalg.norm(A.value(t + h) - A.value(t), 2) for t in tau)
    assert meas <= A.translate_distance(h) + 1e-12


def test_translate_is_a_phase_advance(problem1):
    p = problem1.with_omega(7.0)
    h, s, t = 0.3, 0.1, 0.9
    shifted = translate(p, h)
    for q0, q1 in zip(p.scalars().values(), shifted.scalars().values()):
        assert q1.primitive(s, t, p.omega) == pytest.approx(q0.primitive(s + h, t + h, p.omega),
                                                            abs=1e-13)


def test_averaged_problem_has_no_oscillation(problem1):
    avg = problem1.averaged()
    assert avg.max_frequency == 0
    assert avg.A.mean_matrix()[0, 0] == 1.0
    assert not np.any(avg.forcing.g_B.coeffs)


@pytest.mark.parametrize("bad", [
    dict(amp=1.2),           # ellipticity
    dict(a0_amp=1.0),        # lambda0 = 0
    dict(b_amp=1.5),         # b changes sign
])
def test_hypothesis_violations_rejected(grid1, bad):
    with pytest.raises(ConfigurationError):
        make_problem(grid1, **bad)


def test_primitive_argument_checks():
    q = QuasiPeriodicScalar.cosine(1.0, 0.5)
    with pytest.raises(ConfigurationError):
        primitive(q, 1.0, 0.0, 1.0)
    with pytest.raises(ConfigurationError):
        primitive(q, 0.0, 1.0, 0.0)
    with pytest.raises(ConfigurationError):
        QuasiPeriodicScalar(1.0, ((0.1, -1.0, 0.0),))
    with pytest.raises(ConfigurationError):
        QuasiPeriodicScalar(1.0, ((0.1, 0.0, 0.0),)).mean_value()
