import numpy as np

from rdavg.config import load_config
from rdavg.experiments import (DissipativeRun, check_bounds, dissipative_runs, initial_ensemble,
                               parallel_map)

SMALL = {"grid": {"modes_per_axis": 64},
         "sweeps": {"omegas": [1, 8], "seeds": [0, 1], "hull_shifts": 2}}


def test_initial_ensemble_is_seeded_and_bounded():
    cfg = load_config()
    a = initial_ensemble(cfg, seeds=[3, 4])
    b = initial_ensemble(cfg, seeds=[3, 4])
    R = cfg.raw["sweeps"]["ensemble_radius"]
    for f, g in zip(a, b):
        assert np.array_equal(f.coeffs, g.coeffs)
        assert R / 4 <= f.l2() <= R


def test_parallel_map_preserves_order():
    assert parallel_map(abs, [-3, 1, -2], jobs=2) == [3, 1, 2]


def test_worker_count_does_not_change_results(tmp_path):
    cfg = load_config(overrides=SMALL)
    one = dissipative_runs(cfg, jobs=1, t_end=3.0)
    two = dissipative_runs(cfg, jobs=2, t_end=3.0)
    for a, b in zip(one, two):
        assert a.omega == b.omega
        assert np.array_equal(a.l2_sq, b.l2_sq) and np.array_equal(a.tail, b.tail)
    path = one[1].save(tmp_path / "run.npz")
    back = DissipativeRun.load(path)
    assert back.omega == 8.0 and back.meta == one[1].meta
    assert np.array_equal(back.grad_sq, one[1].grad_sq)
    assert check_bounds(cfg, back) == check_bounds(cfg, one[1])
