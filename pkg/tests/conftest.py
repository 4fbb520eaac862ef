import numpy as np
import pytest

from rdavg.coefficients import (ForcingSpec, NonlinearitySpec, ProblemSpec, QuasiPeriodicMatrix,
                                QuasiPeriodicScalar, default_profiles)
from rdavg.spectral import GridSpec


def make_problem(grid, amp=0.5, a0_amp=0.5, b_amp=0.5, forcing_B=1.0, omega=1.0,
                 forcing_A=2.0):
    A = QuasiPeriodicMatrix.isotropic(grid.dim, QuasiPeriodicScalar.cosine(1.0, amp, 1.0, 0.0))
    a0 = QuasiPeriodicScalar.cosine(1.0, a0_amp, 1.0, 0.5)
    b = QuasiPeriodicScalar.cosine(1.0, b_amp, 1.0, 1.0)
    gA, gB = default_profiles(grid, amplitude_A=forcing_A, amplitude_B=forcing_B)
    return ProblemSpec(grid, A, a0, NonlinearitySpec(b), ForcingSpec(gA, gB), omega=omega)


@pytest.fixture(scope="session")
def grid1():
    return GridSpec(dim=1, half_width=10.0, modes_per_axis=64)


@pytest.fixture(scope="session")
def grid2():
    return GridSpec(dim=2, half_width=8.0, modes_per_axis=32)


@pytest.fixture(scope="session")
def problem1(grid1):
    return make_problem(grid1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
