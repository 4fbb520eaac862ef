import json

import numpy as np
import pytest

from rdavg.config import DEFAULT_CONFIG, SCHEMA_VERSION, ExperimentConfig, load_config
from rdavg.errors import ConfigurationError
from rdavg.tables import read_table, write_table


def test_default_config_certified_constants():
    cfg = load_config()
    c = cfg.constants()
    assert (c["nu0"], c["lambda0"], c["L"]) == (0.5, 0.5, 0.0)
    assert c["C_g"] == pytest.approx(3 * np.pi**0.25, rel=1e-12)
    assert cfg.grid.modes_per_axis == 256 and cfg.grid.half_width == 20.0
    assert len(cfg.seeds) >= 20 and len(cfg.hull_shifts) == 5
    assert cfg.omegas == [1.0, 8.0, 64.0]


def test_file_merge_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"schema_version": SCHEMA_VERSION, "sweeps": {"omegas": [2, 4]},
                                "problem": {"forcing": {"profile": "sech"}}}))
    cfg = load_config(path, {"scheme": {"order": 1}})
    assert cfg.omegas == [2.0, 4.0]
    assert cfg.scheme.order == 1
    assert cfg.raw["sweeps"]["seeds"] == DEFAULT_CONFIG["sweeps"]["seeds"]
    again = ExperimentConfig(json.loads(cfg.to_json()))
    assert again.raw == cfg.raw


def test_matrix_diffusion_in_two_dimensions():
    cfg = load_config(overrides={
        "grid": {"dim": 2, "modes_per_axis": 32, "half_width": 8.0},
        "problem": {"diffusion": {"matrix": {"00": {"mean": 1.0, "terms": [[0.2, 1.0, 0.0]]},
                                             "01": 0.1, "11": 1.5}}},
        "verification": {"tail_radius": 6.0},
    })
    assert cfg.problem.A.dim == 2
    assert cfg.problem.nu0 == pytest.approx(np.linalg.eigvalsh([[1.0, 0.1], [0.1, 1.5]])[0] - 0.2)


@pytest.mark.parametrize("override,fragment", [
    ({"grid": {"bogus": 1}}, "unknown config key 'grid.bogus'"),
    ({"schema_version": 7}, "schema_version"),
    ({"sweeps": {"omegas": []}}, "omegas"),
    ({"sweeps": {"omegas": [1, -2]}}, "omegas"),
    ({"verification": {"linear_omegas": [4, 2]}}, "linear_omegas"),
    ({"verification": {"delta": 3.0}}, "delta"),
    ({"verification": {"tail_radius": 25.0}}, "tail_radius"),
    ({"problem": {"forcing": {"profile": "square"}}}, "unknown forcing profile"),
    ({"problem": {"diffusion": {"mean": 1.0, "terms": [[1.5, 1.0, 0.0]]}}}, "ellipticity"),
    ({"problem": {"a0": {"mean": 0.4, "terms": [[0.5, 1.0, 0.0]]}}}, "dissipativity"),
    ({"problem": {"b": {"mean": 1.0, "terms": [["x", 1.0, 0.0]]}}}, "problem.b"),
    ({"scheme": {"order": 4}}, "order"),
    ({"grid": {"modes_per_axis": 63}}, "modes_per_axis"),
])
def test_invalid_configs_rejected_with_precise_messages(override, fragment):
    with pytest.raises(ConfigurationError, match=fragment.replace("'", ".")):
        load_config(overrides=override)


def test_bad_config_files(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError, match="not valid JSON"):
        load_config(bad)
    bad.write_text(json.dumps({"sweeps": {}}))
    with pytest.raises(ConfigurationError, match="schema_version"):
        load_config(bad)


def test_table_round_trip(tmp_path):
    meta = {"constants": {"nu0": 0.5}, "note": "x"}
    cols = {"omega": [1.0, 2.0], "gap": [0.1, 1 / 3], "ok": [True, False], "name": ["a", "b"]}
    path = write_table(tmp_path / "t.tsv", cols, meta)
    m, c = read_table(path)
    assert m == meta
    assert c["gap"][1] == 1 / 3
    assert list(c["ok"]) == [1.0, 0.0]
    assert list(c["name"]) == ["a", "b"]
    with pytest.raises(ConfigurationError):
        write_table(tmp_path / "u.tsv", {"a": [1, 2], "b": [1]})
