"""Tests for the command-line entry point."""
import json
import sys

import pytest

import classical_limits
from src.errors import ScenarioError


def test_parse_sweep():
    assert classical_limits.parse_sweep("theta=0.5,1,2") == ("theta", [0.5, 1.0, 2.0])
    with pytest.raises(ScenarioError):
        classical_limits.parse_sweep("theta")
    with pytest.raises(ScenarioError):
        classical_limits.parse_sweep("theta=a,b")


def test_run_writes_outputs(tmp_path):
    out = classical_limits.run("likelihood", out_dir=str(tmp_path))
    assert (tmp_path / "likelihood.csv").exists()
    manifest = json.loads((tmp_path / "run_manifest.json").read_text(encoding="utf-8"))
    assert manifest["kind"] == "likelihood"
    assert manifest["outputs"][0]["rows"] == 81
    assert manifest["scenario_sha256"] == out["manifest"].scenario_sha256


def test_run_sweep_writes_sweep_file(tmp_path):
    classical_limits.run("optimize-g", out_dir=str(tmp_path), fmt="json", sweep_spec="r=1e3,1e4")
    doc = json.loads((tmp_path / "sweep_r.json").read_text(encoding="utf-8"))
    assert [row["r"] for row in doc["rows"]] == [1e3, 1e4]


def test_run_verify_writes_report(tmp_path):
    scenario = tmp_path / "verify.json"
    scenario.write_text(json.dumps({"kind": "verify", "parameters": {"checks": ["gravity_constant"]}}))
    out = classical_limits.run("verify", scenario_path=str(scenario), out_dir=str(tmp_path / "out"))
    assert out["result"].passed
    assert (tmp_path / "out" / "verification.txt").exists()


def test_command_must_match_scenario_kind(tmp_path):
    scenario = tmp_path / "orbit.json"
    scenario.write_text(json.dumps({"kind": "orbit"}))
    with pytest.raises(ScenarioError):
        classical_limits.run("likelihood", scenario_path=str(scenario), out_dir=str(tmp_path))


def test_invalid_scenario_exits_with_code_2(tmp_path, monkeypatch, capsys):
    scenario = tmp_path / "bad.json"
    scenario.write_text(json.dumps({"kind": "orbit", "parameters": {"bogus": 1}}))
    monkeypatch.setattr(sys, "argv", ["classical_limits.py", "orbit", "--scenario", str(scenario),
                                      "--out", str(tmp_path)])
    with pytest.raises(SystemExit) as info:
        classical_limits.main()
    assert info.value.code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["source"] == str(scenario)
    assert any("bogus" in m for m in err["errors"])


def test_failed_verification_exits_with_code_1(tmp_path, monkeypatch):
    scenario = tmp_path / "verify.json"
    scenario.write_text(json.dumps({"kind": "verify", "parameters": {"checks": ["gravity_constant"]}}))
    monkeypatch.setattr(sys, "argv", ["classical_limits.py", "verify", "--scenario", str(scenario),
                                      "--out", str(tmp_path / "out"), "--tolerance", "0.1"])
    with pytest.raises(SystemExit) as info:
        classical_limits.main()
    assert info.value.code == 1
