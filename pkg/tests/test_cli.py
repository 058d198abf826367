import csv
import filecmp
import json

import pytest
from click.testing import CliRunner

from hamcap.cli import main


def run(*args, env=None):
    return CliRunner().invoke(main, list(args), env=env, catch_exceptions=False)


def test_profiles_writes_csv_with_sample_rows(tmp_path):
    res = run("profiles", "--out", str(tmp_path))
    assert res.exit_code == 0, res.output
    rows = list(csv.reader(open(tmp_path / "profiles.csv")))
    cfg = json.load(open(tmp_path / "profiles.json"))["config"]
    assert len(rows) - 1 == cfg["samples"] == 401
    assert (tmp_path / "profiles.svg").read_text().startswith("<?xml")
    assert "|diff|" in res.output and "intercept" in res.output


@pytest.mark.parametrize("preset", ["annulus-r2", "torus-gk"])
def test_profiles_other_presets(tmp_path, preset):
    assert run("profiles", "--preset", preset, "--out", str(tmp_path)).exit_code == 0


def test_orbits_squeezing_pair(tmp_path):
    res = run("orbits", "--out", str(tmp_path))
    assert res.exit_code == 0, res.output
    assert res.output.count("2 families at density 64") == 2
    for name in ("orbits.json", "orbits.csv", "portrait.svg"):
        assert (tmp_path / name).exists()


def test_orbits_counterexample(tmp_path):
    res = run("orbits", "--preset", "counterexample", "--out", str(tmp_path))
    assert res.exit_code == 0
    assert "0 orbits at density 64" in res.output


def test_orbits_perturbed_torus(tmp_path):
    res = run("orbits", "--preset", "torus", "--out", str(tmp_path))
    assert res.exit_code == 0
    assert "4 isolated orbits" in res.output and "evenness check pass" in res.output


def test_orbits_ball(tmp_path):
    res = run("orbits", "--preset", "ball", "--out", str(tmp_path))
    assert res.exit_code == 0
    assert "[PASS] orbit exists" in res.output


def test_capacity_annulus(tmp_path):
    res = run("capacity", "--out", str(tmp_path), "--cap-tol", "0.05")
    assert res.exit_code == 0, res.output
    rep = json.load(open(tmp_path / "capacity.json"))
    assert rep["lower"] <= 0.6 <= rep["upper"]
    assert rep["cp_comparison"]["criterion_met"] is True


def test_capacity_lagrangian(tmp_path):
    res = run("capacity", "--preset", "lagrangian", "--out", str(tmp_path))
    assert res.exit_code == 0
    assert "no upper witness found <= c_max" in res.output
    assert json.load(open(tmp_path / "capacity.json"))["upper"] is None


def test_bad_bracket_exits_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bracket": [0.8, 1.0]}))
    assert run("capacity", "--config", str(cfg), "--out", str(tmp_path)).exit_code == 2


@pytest.mark.parametrize(
    "content",
    [{"nonsense": 1}, {"preset": "nowhere"}, {"r": 0}, [1, 2]],
)
def test_config_errors_exit_2(tmp_path, content):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(content))
    assert run("orbits", "--config", str(cfg), "--out", str(tmp_path)).exit_code == 2


def test_failed_assertion_exits_1(tmp_path):
    # too few seeds to find both families: the run completes but its checks fail
    res = run("orbits", "--grid", "16", "--steps", "256", "--out", str(tmp_path))
    assert res.exit_code == 1
    assert "[FAIL]" in res.output


def test_module_error_exits_1(tmp_path):
    # the gap hypothesis fails for R = 1.5, so the squeezing pair cannot be built
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"R": 1.5}))
    res = run("orbits", "--config", str(cfg), "--out", str(tmp_path))
    assert res.exit_code == 1
    assert "ThresholdNotMet" in res.output


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("orbits", "--preset", "counterexample", "--out", str(out)).exit_code == 0
        assert run("profiles", "--out", str(out)).exit_code == 0
    names = sorted(p.name for p in a.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert not mismatch and not errors and len(match) == 6


def test_seed_env_var(tmp_path):
    res = run("profiles", "--out", str(tmp_path), env={"HAMCAP_SEED": "7"})
    assert res.exit_code == 0
    assert json.load(open(tmp_path / "profiles.json"))["config"]["seed"] == 7
    assert run("profiles", "--out", str(tmp_path), env={"HAMCAP_SEED": "x"}).exit_code == 2


def test_verify_single_criterion(tmp_path):
    res = run("verify", "--only", "3", "--out", str(tmp_path))
    assert res.exit_code == 0
    assert "[PASS] criterion 3" in res.output and "criteria passed in" in res.output
    summary = json.load(open(tmp_path / "summary.json"))
    assert summary["passed"] and summary["criteria"][0]["number"] == 3


def test_verify_injected_violation_fails(tmp_path):
    res = run("verify", "--only", "3", "--set", "slope_margin=1.0")
    assert res.exit_code == 2
    res = run("verify", "--only", "2", "--set", "action_closed_form=1e-20")
    assert res.exit_code == 1
    assert "[FAIL] criterion 2" in res.output and "tangent-line formulas" in res.output


def test_verify_bad_override():
    assert run("verify", "--set", "energy_drift").exit_code == 2
