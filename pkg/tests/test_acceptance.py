"""One test per acceptance criterion, each printing a single PASS/FAIL line.

The expensive shared runs (the dissipative ensemble and the main cloud
experiment) are computed once per module through ``AcceptanceContext``.
"""

import pytest

from rdavg.acceptance import CRITERIA, AcceptanceContext

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def ctx():
    return AcceptanceContext()


def _check(ctx, number, capsys):
    result = CRITERIA[number](ctx)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()


def test_criterion_01_process_laws(ctx, capsys):
    _check(ctx, 1, capsys)


def test_criterion_02_heat_kernel_and_ode_oracles(ctx, capsys):
    _check(ctx, 2, capsys)


def test_criterion_03_dissipative_bounds(ctx, capsys):
    _check(ctx, 3, capsys)


def test_criterion_04_tail_estimate(ctx, capsys):
    _check(ctx, 4, capsys)


def test_criterion_05_process_difference_bound(ctx, capsys):
    _check(ctx, 5, capsys)


def test_criterion_06_linear_averaging(ctx, capsys):
    _check(ctx, 6, capsys)


def test_criterion_07_nonlinear_averaging(ctx, capsys):
    _check(ctx, 7, capsys)


def test_criterion_08_g_functionals(ctx, capsys):
    _check(ctx, 8, capsys)


def test_criterion_09_attractor_upper_semicontinuity(ctx, capsys):
    _check(ctx, 9, capsys)


def test_criterion_10_scheme_integrity(ctx, capsys):
    _check(ctx, 10, capsys)
