import json

import pytest

from rdavg.cli import main
from rdavg.tables import read_table

SMALL = {
    "schema_version": 1,
    "grid": {"modes_per_axis": 64},
    "sweeps": {"omegas": [1, 4], "seeds": [0, 1], "hull_shifts": 2},
}


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_validate_echoes_certified_constants(tmp_path, capsys):
    assert run("validate", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert out.startswith("OK")
    for key in ("nu0 = 0.5", "lambda0 = 0.5", "C_g = 3.99401", "L = 0"):
        assert key in out
    data = json.loads((tmp_path / "validate.json").read_text())
    assert data["passed"] and data["certified"]["K"] == pytest.approx(15.976, abs=1e-3)


def test_invalid_config_exits_2_before_any_compute(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "problem": {
        "diffusion": {"mean": 1.0, "terms": [[1.5, 1.0, 0.0]]}}}))
    out = tmp_path / "o"
    assert run("simulate", "--config", bad, "--out", out) == 2
    assert "ellipticity" in capsys.readouterr().err
    assert not (out / "simulate").exists()
    assert run("validate", "--config", tmp_path / "none.json", "--out", out) == 2


def test_missing_upstream_stage_exits_5(tmp_path, small, capsys):
    assert run("verify-bounds", "--config", small, "--out", tmp_path) == 5
    assert "rdavg simulate" in capsys.readouterr().err


def test_blow_up_exits_3(tmp_path):
    cfg = {"schema_version": 1, "grid": {"modes_per_axis": 64},
           "scheme": {"base_step": 1.0, "c_osc": 1.0},
           "sweeps": {"omegas": [1], "seeds": [0], "hull_shifts": 1, "ensemble_radius": 1000.0}}
    path = tmp_path / "blow.json"
    path.write_text(json.dumps(cfg))
    assert run("simulate", "--config", path, "--out", tmp_path / "o", "--quiet") == 3


def test_report_with_partial_results(tmp_path, capsys):
    assert run("report", "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary["missing"]) == {"validate", "simulate", "verify-bounds", "averaging",
                                       "attractor", "acceptance"}
    assert "MISSING" in capsys.readouterr().out


def test_simulate_verify_report_pipeline(tmp_path, small, monkeypatch, capsys):
    monkeypatch.setenv("RDAVG_OUT", str(tmp_path / "env"))
    assert run("simulate", "--config", small, "--quiet") == 0
    out = tmp_path / "env"
    meta, cols = read_table(out / "simulate" / "omega_4.tsv")
    assert meta["constants"]["omega"] == 4.0 and meta["constants"]["lambda0"] == 0.5
    assert cols["time"][-1] >= meta["tail_time"]
    assert run("verify-bounds", "--config", small) == 0
    assert "PASS [3]" in capsys.readouterr().out
    bmeta, b = read_table(out / "bounds.tsv")
    assert list(b["violations"]) == [0.0, 0.0]
    assert "constants" in bmeta
    assert run("report", "--quiet") == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["sections"]["verify-bounds"]["passed"] is True
    assert "figures/energy.png" in summary["figures"]
    assert (out / "figures" / "energy.png").stat().st_size > 0


def test_seed_and_omega_flags_are_deterministic(tmp_path, small):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("simulate", "--config", small, "--out", d, "--seed", 5,
                   "--omega-list", "2", "--quiet") == 0
    ta = (a / "simulate" / "omega_2.tsv").read_text()
    assert ta == (b / "simulate" / "omega_2.tsv").read_text()
    assert not (a / "simulate" / "omega_1.tsv").exists()


def test_acceptance_subset_and_failure_code(tmp_path, capsys):
    assert run("acceptance", "--only", 1, 2, "--out", tmp_path) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("PASS [1]") and lines[1].startswith("PASS [2]")
    # a two-point omega list cannot show a tenfold decay of the linear gap
    cfg = tmp_path / "short.json"
    cfg.write_text(json.dumps({"schema_version": 1, "verification": {"linear_omegas": [1, 2]}}))
    assert run("acceptance", "--only", 6, "--config", cfg, "--out", tmp_path / "f") == 4
    data = json.loads((tmp_path / "f" / "acceptance.json").read_text())
    assert data["passed"] is False


def test_bad_omega_list_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run("simulate", "--omega-list", "a,b", "--out", tmp_path)
    assert exc.value.code == 2
