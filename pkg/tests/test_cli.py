import json

import pytest

from twovec.harness.cli import main


@pytest.fixture
def files(tmp_path):
    obs = tmp_path / "obs.json"
    obs.write_text(json.dumps({"b1": [1, 0, 0], "r1": [1, 0, 0], "b2": [0, 0, 1], "r2": [0, 1, 0]}))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"true_quaternion": [0, 0, 1, 0], "r1": [1, 0, 0], "r2": [0, 1, 0], "noise": {"sigma": 0.01}, "trials": 5000, "seed": 1}))
    return tmp_path, obs, cfg


def test_estimate(files, capsys):
    _, obs, _ = files
    assert main(["estimate", "--obs", str(obs)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["case"] == "B"


def test_estimate_bad_input(files, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"b1": [2, 0, 0], "r1": [1, 0, 0], "b2": [0, 0, 1], "r2": [0, 1, 0]}))
    assert main(["estimate", "--obs", str(bad)]) == 2
    bad.write_text("{not json")
    assert main(["estimate", "--obs", str(bad)]) == 2


def test_estimate_collinear_is_input_error(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"b1": [1, 0, 0], "r1": [1, 0, 0], "b2": [-1, 0, 0], "r2": [-1, 0, 0]}))
    assert main(["estimate", "--obs", str(f)]) == 2


def test_montecarlo_writes_report(files):
    tmp, _, cfg = files
    out = tmp / "r.json"
    assert main(["montecarlo", "--config", str(cfg), "--out", str(out), "--trials", "1000"]) == 0
    rep = json.loads(out.read_text())
    assert rep["payload"]["config"]["trials"] == 1000


def test_montecarlo_csv(files):
    tmp, _, cfg = files
    out = tmp / "r.csv"
    assert main(["montecarlo", "--config", str(cfg), "--out", str(out), "--format", "csv"]) == 0
    assert out.read_text().startswith("key,value")


def test_validate_exit_codes(files):
    tmp, _, cfg = files
    assert main(["validate-covariance", "--config", str(cfg)]) == 0
    # at sigma = 0.3 the small-noise model no longer holds
    assert main(["validate-covariance", "--config", str(cfg), "--sigma", "0.3", "--trials", "200000"]) == 1


def test_input_errors(files, tmp_path):
    _, _, cfg = files
    assert main(["montecarlo", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["montecarlo", "--config", str(cfg), "--seed", "-3"]) == 2
    assert main(["bogus"]) == 2
    singular = tmp_path / "sing.json"
    singular.write_text(json.dumps({"true_quaternion": [0, 0, 0, 1], "trials": 10}))
    assert main(["validate-covariance", "--config", str(singular)]) == 2


def test_help_exits_zero():
    assert main(["--help"]) == 0
