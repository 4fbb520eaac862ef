import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rdavg.attractor import (AttractorCloud, CloudParams, build_cloud, h1_embedding,
                             hausdorff_semidist, upper_semicontinuity_experiment)
from rdavg.dynamics import read_snapshots
from rdavg.errors import ConfigurationError
from rdavg.spectral import GridSpec, SpectralField, norm_h1, random_field
from rdavg.tables import read_table

GRID = GridSpec(1, 6.0, 32)


def _cloud(rng, n):
    return AttractorCloud.from_fields(
        [random_field(GRID, rng, l2_norm=rng.uniform(0.2, 2.0)) for _ in range(n)])


def _brute(X, Y):
    return max(min(norm_h1(x - y) for y in Y.points) for x in X.points)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(1, 25), m=st.integers(1, 25))
def test_semidistance_matches_brute_force(seed, n, m):
    rng = np.random.default_rng(seed)
    X, Y = _cloud(rng, n), _cloud(rng, m)
    assert hausdorff_semidist(X, Y) == pytest.approx(_brute(X, Y), rel=1e-12, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_semidistance_properties(seed):
    rng = np.random.default_rng(seed)
    X, Y, Z = _cloud(rng, 6), _cloud(rng, 9), _cloud(rng, 4)
    assert hausdorff_semidist(X, X) == 0.0
    assert hausdorff_semidist(X, X.union(Y)) == 0.0           # subsets sit at distance zero
    assert hausdorff_semidist(X, Y) >= 0.0
    # triangle inequality of the semidistance
    assert hausdorff_semidist(X, Z) <= hausdorff_semidist(X, Y) + hausdorff_semidist(Y, Z) + 1e-12


def test_embedding_is_an_h1_isometry(rng):
    X = _cloud(rng, 5)
    e = h1_embedding(X)
    pts = X.points
    for i in range(5):
        for j in range(5):
            assert np.linalg.norm(e[i] - e[j]) == pytest.approx(norm_h1(pts[i] - pts[j]),
                                                                 rel=1e-12, abs=1e-15)


def test_cloud_diagnostics_and_manifest(tmp_path, problem1, rng):
    params = CloudParams(transient=20.0, window=2.0, sample_spacing=0.5, tail_radius=8.5)
    ens = [random_field(problem1.grid, rng, l2_norm=1.0) for _ in range(2)]
    cloud = build_cloud(problem1, 4.0, [0.0, np.pi], ens, params)
    assert len(cloud) == 2 * 2 * 5
    d = cloud.diagnostics
    assert d["inside_absorbing_ball"] and d["tail_ok"] and d["drift"] <= params.drift_tol
    assert np.all(cloud.time >= params.transient - 1e-9)
    index, snaps = cloud.write_manifest(tmp_path, "c")
    meta, cols = read_table(index)
    assert len(cols["point"]) == len(cloud)
    assert meta["diagnostics"]["tail_ok"] is True
    grid, times, fields = read_snapshots(snaps)
    assert np.allclose(times, cloud.time)
    assert norm_h1(fields[3] - cloud.points[3]) == 0.0


def test_short_transient_rejected(problem1, rng):
    big = [random_field(problem1.grid, rng, l2_norm=200.0)]
    with pytest.raises(ConfigurationError):
        build_cloud(problem1, 4.0, [0.0], big, CloudParams(transient=1.0, tail_radius=8.5))


def test_empty_inputs_rejected(problem1):
    with pytest.raises(ConfigurationError):
        AttractorCloud.from_fields([])
    with pytest.raises(ConfigurationError):
        build_cloud(problem1, 4.0, [0.0], [], CloudParams(tail_radius=8.5))
    with pytest.raises(ConfigurationError):
        upper_semicontinuity_experiment(problem1, [4, 2], [0.0], [SpectralField.zeros(problem1.grid)],
                                        CloudParams(tail_radius=8.5))


def test_distance_to_averaged_attractor_shrinks(problem1, rng):
    params = CloudParams(transient=16.0, window=2 * np.pi, sample_spacing=0.4, tail_radius=8.5)
    ens = [random_field(problem1.grid, rng, l2_norm=1.0) for _ in range(2)]
    res = upper_semicontinuity_experiment(problem1, [1.0, 16.0], [0.0, np.pi], ens, params)
    assert res.distance[1] < 0.5 * res.distance[0]
    assert np.all(res.eps_cloud >= 0)
