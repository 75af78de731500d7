import json
import subprocess
import sys

import pytest

from dflat.cli import main

from .conftest import system_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv, "--json")
    return code, json.loads(out)


def test_validate(capsys, tmp_path):
    assert run(capsys, "validate", system_path("example1"))[0] == 0
    drift = tmp_path / "drift.json"
    drift.write_text('{"states": ["x1"], "inputs": ["u1"], "f": ["x1"]}')
    code, out = run(capsys, "validate", drift)
    assert code == 2 and "input-rank" in out
    broken = tmp_path / "broken.json"
    broken.write_text('{"states": [')
    code, out = run(capsys, "validate", broken)
    assert code == 1 and "line 1, column 13" in out


def test_missing_file(capsys, tmp_path):
    code, report = run_json(capsys, "validate", tmp_path / "nope.json")
    assert code == 1 and "cannot read" in report["results"][0]["error"]


def test_test_example(capsys):
    code, report = run_json(capsys, "test", system_path("example1"), "--derive", "--max-degree", "2", "--seed", "7")
    assert code == 0
    assert report["schema"] == 1 and report["seed"] == 7
    entry = report["results"][0]
    assert entry["forward"]["verdict"] == "not-forward-flat"
    assert entry["backward"]["verdict"] == "backward-flat"
    out = entry["backward"]["output"]
    assert out["outputs"] == ["u1", "u1*u2 + u2*x1 + x2*x4 + x3"]
    assert out["R1"] == [3, 2] and out["R2"] == [0, 0]
    assert out["Q1"] == [0, 0] and out["Q2"] == [0, 0]
    assert out["mirror"] == {"parameterization_matches": True, "jacobian_matches": True}
    assert out["roundtrip_check"]["ok"] and out["correspondence_check"]["ok"]
    assert "timings" not in entry


def test_human_output(capsys):
    code, out = run(capsys, "test", system_path("integrator"))
    assert code == 0
    assert "forward: YES" in out and "backward: YES" in out


def test_negative_exit_code(capsys):
    code, out = run(capsys, "test", system_path("uncontrollable"), "--mode", "backward")
    assert code == 2 and "backward: NO" in out


def test_batch_order_and_worst_code(capsys):
    code, report = run_json(capsys, "test", system_path("uncontrollable"), system_path("integrator"))
    assert code == 2
    assert [r["name"] for r in report["results"]] == ["uncontrollable", "integrator"]
    assert [r["exit_code"] for r in report["results"]] == [2, 0]


def test_verify(capsys, tmp_path):
    code, report = run_json(capsys, "verify", system_path("example1"), "--output", system_path("example1_output"))
    v = report["results"][0]["verification"]
    assert code == 0 and v["ok"] and v["R1"] == [3, 2]
    r = v["ranks"]
    assert (r["rank_x_deepest"], r["rank_g_deepest"], r["rank_x_top"], r["rank_u_top"]) == (1, 1, 2, 2)
    wrong = tmp_path / "wrong.json"
    wrong.write_text('{"outputs": ["x1", "x2"]}')
    code, report = run_json(capsys, "verify", system_path("example1"), "--output", wrong)
    assert code == 2 and report["results"][0]["verification"]["status"] == "not-verified"
    code, _ = run(capsys, "verify", system_path("integrator"), "--output", system_path("integrator_output"))
    assert code == 0


def test_associated_round_trip(capsys, tmp_path):
    code, out = run(capsys, "associated", system_path("example1"))
    assert code == 0
    path = tmp_path / "assoc.json"
    path.write_text(out)
    assert json.loads(out)["f"][2] == "-v1*z2 - v2*z1 + z3"
    assert run(capsys, "validate", path)[0] == 0


def test_simcheck(capsys, monkeypatch):
    monkeypatch.setenv("FLATNESS_SEED", "11")
    code, report = run_json(capsys, "simcheck", system_path("example1"), "--seeds", "10")
    assert code == 0 and report["seed"] == 11
    assert report["results"][0]["correspondence_check"]["seeds"] == 10


def test_timings_opt_in(capsys):
    _, report = run_json(capsys, "test", system_path("integrator"), "--timings")
    assert "forward" in report["results"][0]["timings"]


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["test"])
    assert info.value.code == 1


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "dflat", "validate", str(system_path("integrator"))],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0 and "valid: yes" in res.stdout
