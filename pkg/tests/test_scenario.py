"""Tests for scenario parsing, runners, sweeps and output writers."""
import json
from pathlib import Path

import pytest

from src.errors import ScenarioError
from src.evaluation import (
    check_rows,
    format_verification_report,
    generate_verification_report,
    run_verify_suite,
)
from src.io_outputs import csv_body, format_value, write_result
from src.scenario import (
    default_scenario,
    load_scenario,
    run_scenario,
    scenario_from_dict,
    sweep,
)

SCENARIOS = Path(__file__).parent.parent / "scenarios"


def test_all_validation_errors_are_reported_together():
    doc = {
        "kind": "orbit",
        "parameters": {"bogus": 1, "g": "strong"},
        "output": {"format": "xml"},
        "tolerance": -1,
    }
    with pytest.raises(ScenarioError) as info:
        scenario_from_dict(doc, "bad.json")
    messages = info.value.messages
    assert len(messages) == 4
    assert any("bogus" in m for m in messages)
    assert any("parameters.g" in m for m in messages)
    assert any("output.format" in m for m in messages)
    assert any("tolerance" in m for m in messages)
    assert info.value.path == "bad.json"


@pytest.mark.parametrize(
    "doc, fragment",
    [
        ({"kind": "teleport"}, "kind"),
        ({"kind": "orbit", "units": {"system": "si"}}, "mass_kg"),
        ({"kind": "orbit", "parameters": {"eps_r": 1.5}}, "span"),
        ({"kind": "likelihood", "parameters": {"r": 100.0}}, "together"),
        ({"kind": "optimize-g", "parameters": {"beta0": None}}, "L0 or beta0"),
        ({"kind": "l0-model", "parameters": {"T_inf": -1.0}}, "T_inf"),
        ({"kind": "verify", "parameters": {"checks": ["nope"]}}, "nope"),
    ],
)
def test_invalid_scenarios(doc, fragment):
    with pytest.raises(ScenarioError) as info:
        scenario_from_dict(doc)
    assert any(fragment in m for m in info.value.messages)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "absent.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ScenarioError) as info:
        load_scenario(broken)
    assert info.value.path == str(broken)


def test_bundled_scenarios_load():
    for name in ("kepler_orbit", "circular_orbit", "optimize_g", "escape_l0", "cross_section", "verify"):
        assert load_scenario(SCENARIOS / f"{name}.json").kind


def test_digest_depends_only_on_contents():
    a = scenario_from_dict({"kind": "likelihood", "name": "first", "parameters": {"a0": 8.0}})
    b = scenario_from_dict({"kind": "likelihood", "name": "second", "parameters": {"a0": 8.0}})
    c = scenario_from_dict({"kind": "likelihood", "parameters": {"a0": 9.0}})
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()


def test_si_units():
    s = scenario_from_dict({"kind": "orbit", "units": {"system": "si", "mass_kg": 1.66053906660e-27}})
    assert s.units.length_unit == "m"


def test_likelihood_run_has_unit_headers():
    res = run_scenario(default_scenario("likelihood"))
    assert len(res.rows) == 81
    assert res.rows[0]["I"] == pytest.approx(1.0)
    assert res.headers["theta"] == "theta [rad]"
    assert res.headers["lambda"] == "lambda [lambda_c]"
    assert res.summary["I_at_zero"] == pytest.approx(1.0)


def test_identical_runs_give_identical_bytes():
    s = default_scenario("likelihood")
    first = run_scenario(s)
    second = run_scenario(s)
    assert csv_body(first.rows, first.columns, first.headers) == csv_body(second.rows, second.columns, second.headers)


def test_orbit_run():
    res = run_scenario(scenario_from_dict({"kind": "orbit", "parameters": {"points": 20}}))
    assert res.summary["max_rel_error"] < 1e-6
    assert "r [lambda_c]" in res.headers.values()


def test_optimize_g_run():
    res = run_scenario(default_scenario("optimize-g"))
    assert len(res.rows) == 1
    assert res.summary["g"] == pytest.approx(res.summary["g_r_independent"], rel=1e-2)


def test_cross_section_closed_form_run():
    s = scenario_from_dict({"kind": "cross-section", "parameters": {"numeric": False}})
    res = run_scenario(s)
    assert len(res.rows) == 3
    assert res.summary["closed_form"] == pytest.approx(4.0 * res.summary["closed_form_exact_jacobian"])


def test_sweep_sorts_and_keeps_failures():
    s = default_scenario("likelihood")
    res = sweep(s, "a0", [8.0, -1.0, 4.0], threads=2)
    assert [row["a0"] for row in res.rows] == [-1.0, 4.0, 8.0]
    assert res.rows[0]["error"]
    assert not res.rows[1]["error"]
    assert res.columns[-1] == "error"
    assert res.summary["failed"] == 1


def test_sweep_rejects_unknown_axis_and_verify():
    with pytest.raises(ScenarioError):
        sweep(default_scenario("likelihood"), "nonsense", [1.0])
    with pytest.raises(ScenarioError):
        sweep(default_scenario("verify"), "checks", [1.0])


def test_format_value():
    assert format_value(True) == "true"
    assert format_value(0.1) == "0.1"
    assert format_value(None) == ""
    assert format_value([1, 2.5]) == "1;2.5"


def test_write_result_formats(tmp_path):
    s = default_scenario("likelihood")
    res = run_scenario(s)
    csv_path = write_result(res, s.digest(), tmp_path / "likelihood", "csv")
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# classical_limits ")
    assert lines[1] == f"# scenario_sha256: {s.digest()}"
    assert lines[4].startswith("theta [rad]")

    json_path = write_result(res, s.digest(), tmp_path / "likelihood", "json")
    doc = json.loads(json_path.read_text(encoding="utf-8"))
    assert doc["provenance"]["scenario_sha256"] == s.digest()
    assert len(doc["rows"]) == 81


def test_verify_subset():
    results = run_verify_suite(["gravity_constant", "validity_domain", "cubic"], threads=2)
    assert [r.name for r in results] == ["gravity_constant", "validity_domain", "cubic"]
    assert all(r.passed for r in results)
    report = generate_verification_report(results)
    assert report["all_passed"]
    assert report["totals"]["num_passed"] == 3
    text = format_verification_report(report)
    assert "gravity_constant" in text
    assert "ALL CHECKS PASSED" in text
    assert [row["check"] for row in check_rows(results)] == ["gravity_constant", "validity_domain", "cubic"]


def test_verify_rejects_unknown_check():
    with pytest.raises(KeyError):
        run_verify_suite(["nope"])


def test_tight_tolerance_fails_a_check():
    [result] = run_verify_suite(["gravity_constant"], tolerance_scale=0.1)
    assert not result.passed
