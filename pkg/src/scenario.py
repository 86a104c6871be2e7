"""
Scenario files: parsing, validation, execution and parameter sweeps.
============================================================
A scenario is a JSON document naming a kind, a unit system and a flat
parameter block. Missing parameters take the defaults in DEFAULTS.

    {
      "kind": "likelihood",
      "units": {"system": "natural"},
      "parameters": {"a0": 12.0, "a1": 3.0, "c_R": 0.3},
      "output": {"path": "outputs/likelihood", "format": "csv"}
    }

Usage:
    from src.scenario import load_scenario, run_scenario, sweep

    s = load_scenario("scenarios/circular_orbit.json")
    result = run_scenario(s)
    table = sweep(s, "theta", [0.5, 1.0, 2.0], threads=4)
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.core_model import KeplerOrbit, UnitSystem, classical_quantities, kepler_comparison, kepler_period
from src.coupling import optimize_g
from src.errors import ClassicalLimitError, ScenarioError
from src.evaluation import (
    CHECKS,
    check_rows,
    format_verification_report,
    generate_verification_report,
    run_verify_suite,
)
from src.l0_model import (
    L0Dynamics,
    amplitude_along,
    amplitude_rate,
    dominance_ratio,
    escape_trajectory,
    exponential_profile,
    integrate_l0,
    lemma4_stationarity_check,
    validity_domain,
)
from src.likelihood import CircularOrbitCase, circular_case, circular_orbit_amplitude, small_theta_coefficient
from src.scattering import PipelineParams, center_of_mass_scenario, differential_cross_section, numeric_cross_section

logger = logging.getLogger(__name__)

KINDS = ("orbit", "likelihood", "optimize-g", "l0-model", "cross-section", "verify")
FORMATS = ("csv", "json")

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "orbit": {
        "g": 1e-3,            # coupling (length)
        "L": 1.0,             # relative angular momentum (length)
        "eps_r": 0.3,         # eccentricity
        "span": None,         # λ range; one period when omitted
        "points": 200,
    },
    "likelihood": {
        "a0": 12.0,           # r²/8L0²
        "a1": 3.0,            # L0²g/λ_c²r
        "c_R": 0.3,
        "r": None,            # r, g, L0, c4 together replace a0, a1, c_R
        "g": None,
        "L0": None,
        "c4": None,
        "theta": 1.0,         # angle reported in the summary
        "theta_max": 4.0,
        "points": 81,
    },
    "optimize-g": {
        "r": 1e4,
        "c4": 1.0,
        "L0": None,           # fixed spread; else the selection rule with beta0
        "beta0": 1e12,
    },
    "l0-model": {
        "rho": 5.0,           # |V(0)|/T_inf
        "T_inf": 1e-4,
        "g": 5.0,
        "L0": 100.0,          # L0 at τ = 0
        "span": 1e4,
        "points": 51,
        "kappa": None,        # exponential g(T+V) profile
        "stationarity": True,
        "epsilon": 1.0,
    },
    "cross-section": {
        "p": 0.03,            # centre-of-mass momentum (inverse length)
        "c4": 1.0,
        "angles": [0.3, 1.2, 2.8],
        "L0": [1e4],
        "numeric": True,
        "q2_points": 25,
        "q1_points": 33,
        "width": 6.0,
    },
    "verify": {
        "checks": [],         # empty runs every check
    },
}

DEFAULT_TOLERANCE = {"orbit": 1e-12, "l0-model": 1e-12, "verify": 1.0}

# Unit tokens per output column; L is the length unit, E energy per mass.
COLUMN_UNITS = {
    "lambda": "L", "tau": "L", "r": "L", "r_analytic": "L", "L0": "L", "L": "L",
    "g": "L", "g_weak_coupling": "L", "g_r_independent": "L", "span": "L", "period": "L",
    "T": "E", "V": "E", "e_C": "E", "e_C_drift": "E", "T_inf": "E", "max_e_C_drift": "E",
    "theta": "rad", "angle": "rad", "theta_max": "rad",
    "omega": "1/L", "p": "1/L",
    "closed_form": "L^2", "closed_form_exact_jacobian": "L^2", "numeric": "L^2",
    "beta0": "L^5/2",
    "elapsed_sec": "s",
}


@dataclass
class Scenario:
    kind: str
    units: UnitSystem
    parameters: Dict[str, Any]
    output: Optional[str] = None
    format: str = "csv"
    tolerance: Optional[float] = None
    name: str = ""
    source: Optional[str] = None

    def digest(self) -> str:
        """sha256 of the canonical (kind, units, parameters, tolerance) document."""
        doc = {
            "kind": self.kind,
            "units": self.units.to_dict(),
            "parameters": self.parameters,
            "tolerance": self.tolerance,
        }
        text = json.dumps(doc, sort_keys=True, default=_json_scalar)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class RunResult:
    kind: str
    rows: List[Dict[str, Any]]
    columns: List[str]
    headers: Dict[str, str]
    summary: Dict[str, Any] = field(default_factory=dict)
    report: Optional[str] = None
    passed: Optional[bool] = None


def _json_scalar(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Not serializable: {type(value)}")


def unit_label(token: str, units: UnitSystem) -> str:
    length = units.length_unit
    return {
        "L": length,
        "E": "m c^2",
        "rad": "rad",
        "1/L": f"1/{length}",
        "L^2": f"{length}^2",
        "L^5/2": f"{length}^5/2",
        "s": "s",
    }.get(token, "1")


def column_headers(rows: List[Dict[str, Any]], columns: Sequence[str], units: UnitSystem) -> Dict[str, str]:
    """Header text per column; numeric columns carry their unit in brackets."""
    headers = {}
    for col in columns:
        numeric = any(
            isinstance(row.get(col), (int, float, np.floating, np.integer))
            and not isinstance(row.get(col), bool)
            for row in rows
        )
        headers[col] = f"{col} [{unit_label(COLUMN_UNITS.get(col, '1'), units)}]" if numeric else col
    return headers


# ---------------------------------------------------------------------------
# Parsing and validation
# ---------------------------------------------------------------------------

def _parse_units(doc: Any, errors: List[str]) -> Optional[UnitSystem]:
    if doc is None:
        return UnitSystem.natural()
    if not isinstance(doc, dict):
        errors.append("units: expected an object")
        return None
    system = doc.get("system", "natural")
    if system == "natural":
        return UnitSystem.natural()
    if system == "si":
        mass = doc.get("mass_kg")
        if not isinstance(mass, (int, float)) or not mass > 0:
            errors.append("units.mass_kg: SI units need a positive particle mass")
            return None
        return UnitSystem.from_mass(float(mass))
    errors.append(f"units.system: unknown system '{system}' (natural or si)")
    return None


def _validate_parameters(kind: str, params: Dict[str, Any], errors: List[str]) -> None:
    defaults = DEFAULTS[kind]
    for key, value in params.items():
        if key not in defaults:
            errors.append(f"parameters.{key}: unknown parameter for kind '{kind}'")
            continue
        expected = defaults[key]
        if isinstance(expected, bool):
            if not isinstance(value, bool):
                errors.append(f"parameters.{key}: expected true or false")
        elif isinstance(expected, list):
            if not isinstance(value, (list, int, float, str)) or isinstance(value, bool):
                errors.append(f"parameters.{key}: expected a list or a single value")
        elif value is not None and (not isinstance(value, (int, float)) or isinstance(value, bool)):
            errors.append(f"parameters.{key}: expected a number, got {value!r}")
        elif isinstance(value, (int, float)) and not math.isfinite(value):
            errors.append(f"parameters.{key}: must be finite")

    if errors:
        return
    merged = {**defaults, **params}
    if kind == "orbit":
        if merged["eps_r"] is None or merged["eps_r"] < 0:
            errors.append("parameters.eps_r: must be non-negative")
        elif merged["eps_r"] >= 1.0 and merged["span"] is None:
            errors.append("parameters.span: required for unbound orbits (eps_r ≥ 1)")
    elif kind == "likelihood":
        physical = [merged[k] is not None for k in ("r", "g", "L0", "c4")]
        if any(physical) and not all(physical):
            errors.append("parameters: r, g, L0 and c4 must be given together")
    elif kind == "optimize-g":
        if merged["L0"] is None and merged["beta0"] is None:
            errors.append("parameters: optimize-g needs L0 or beta0")
    elif kind == "l0-model":
        for key in ("rho", "T_inf", "g", "L0", "span"):
            if merged[key] is None or not merged[key] > 0:
                errors.append(f"parameters.{key}: must be positive")
    elif kind == "cross-section":
        if merged["p"] is None or not merged["p"] > 0:
            errors.append("parameters.p: must be positive")
    elif kind == "verify":
        unknown = [c for c in _as_list(merged["checks"]) if c not in CHECKS]
        if unknown:
            errors.append(f"parameters.checks: unknown checks {unknown}")


def scenario_from_dict(doc: Dict[str, Any], source: Optional[str] = None) -> Scenario:
    """Build and validate a Scenario; all problems are reported together."""
    errors: List[str] = []
    if not isinstance(doc, dict):
        raise ScenarioError(["scenario: expected a JSON object"], source)

    kind = doc.get("kind")
    if kind not in KINDS:
        errors.append(f"kind: expected one of {list(KINDS)}, got {kind!r}")
    units = _parse_units(doc.get("units"), errors)

    params = doc.get("parameters", {}) or {}
    if not isinstance(params, dict):
        errors.append("parameters: expected an object")
        params = {}
    elif kind in KINDS:
        _validate_parameters(kind, params, errors)

    output = doc.get("output", {}) or {}
    fmt = output.get("format", "csv") if isinstance(output, dict) else "csv"
    if fmt not in FORMATS:
        errors.append(f"output.format: expected csv or json, got {fmt!r}")

    tolerance = doc.get("tolerance")
    if tolerance is not None and (not isinstance(tolerance, (int, float)) or not tolerance > 0):
        errors.append("tolerance: must be a positive number")

    if errors:
        raise ScenarioError(errors, source)

    return Scenario(
        kind=kind,
        units=units,
        parameters={**DEFAULTS[kind], **params},
        output=output.get("path") if isinstance(output, dict) else None,
        format=fmt,
        tolerance=float(tolerance) if tolerance is not None else DEFAULT_TOLERANCE.get(kind),
        name=doc.get("name", kind),
        source=source,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioError([f"scenario file not found: {path}"], str(path))
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioError([f"invalid JSON: {e}"], str(path)) from e
    return scenario_from_dict(doc, str(path))


def default_scenario(kind: str) -> Scenario:
    return scenario_from_dict({"kind": kind})


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------

def _as_list(value) -> list:
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _finish(kind: str, rows: List[Dict], units: UnitSystem, summary: Dict, **extra) -> RunResult:
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return RunResult(kind=kind, rows=rows, columns=columns,
                     headers=column_headers(rows, columns, units), summary=summary, **extra)


def _run_orbit(s: Scenario) -> RunResult:
    p = s.parameters
    orbit = KeplerOrbit.from_eccentricity(L=p["L"], g=p["g"], eps_r=p["eps_r"])
    res = kepler_comparison(orbit, s.units, span=p["span"], points=int(p["points"]), tol=s.tolerance)
    summary = {
        "eps_r": orbit.eps_r,
        "e_C": orbit.e_C,
        "max_rel_error": res["max_rel_error"],
        "max_e_C_drift": res["max_e_C_drift"],
        "radius_variation": res["radius_variation"],
        "global_error": res["global_error"],
    }
    if orbit.is_bound:
        summary["period"] = kepler_period(orbit)
    return _finish(s.kind, res["rows"], s.units, summary)


def _likelihood_case(s: Scenario) -> CircularOrbitCase:
    p = s.parameters
    if p["r"] is not None:
        return circular_case(p["r"], p["g"], p["L0"], p["c4"], s.units)
    return CircularOrbitCase.from_constants(p["a0"], p["a1"], p["c_R"], units=s.units)


def _run_likelihood(s: Scenario) -> RunResult:
    p = s.parameters
    case = _likelihood_case(s)
    omega = case.omega
    rows = []
    for theta in np.linspace(0.0, p["theta_max"], int(p["points"])):
        rows.append({
            "theta": float(theta),
            "lambda": float(theta) / omega,
            "I": circular_orbit_amplitude(case, float(theta)),
        })
    summary = {
        "a0": case.a0,
        "a1": case.a1,
        "c_R": case.c_R,
        "k_R": case.k_R,
        "omega": omega,
        "I_at_zero": circular_orbit_amplitude(case, 0.0),
        "theta": p["theta"],
        "I_at_theta": circular_orbit_amplitude(case, p["theta"]),
        "small_theta_coefficient": small_theta_coefficient(case),
    }
    return _finish(s.kind, rows, s.units, summary)


def _run_optimize_g(s: Scenario) -> RunResult:
    p = s.parameters
    res = optimize_g(p["r"], p["c4"], s.units, L0=p["L0"], beta0=p["beta0"] if p["L0"] is None else None)
    return _finish(s.kind, [res], s.units, dict(res))


def _run_l0_model(s: Scenario) -> RunResult:
    p = s.parameters
    units = s.units
    traj = escape_trajectory(p["rho"], p["T_inf"], p["g"], units, p["span"], tol=s.tolerance)
    start = classical_quantities(traj, 0.0)
    profile = exponential_profile(p["kappa"], start.e_C) if p["kappa"] is not None else None
    dyn = L0Dynamics.from_initial(start.T, p["T_inf"], start.e_C, p["L0"], units, g_profile=profile)

    rows = []
    for tau in np.linspace(0.0, p["span"], int(p["points"])):
        point = amplitude_along(traj, dyn, float(tau))
        point["D"] = dominance_ratio(point["T"], point["L0"], dyn)
        rows.append(point)

    validity = validity_domain(p["T_inf"], p["L0"], units, p["rho"])
    ode = integrate_l0(dyn, start.T, rows[-1]["T"])
    summary = {
        "rho_max": validity.rho_max,
        "valid": validity.valid,
        "ode_max_rel_error": ode["max_rel_error"],
        "amplitude_rate": amplitude_rate(traj, dyn, 0.5 * p["span"]),
        "L0_end": rows[-1]["L0"],
        "I_end": rows[-1]["I"],
    }
    if p["stationarity"]:
        report = lemma4_stationarity_check(traj, dyn, p["epsilon"], 0.0, p["span"], rho=p["rho"])
        summary.update({
            "stationarity_skipped": report.skipped,
            "stationary": report.stationary,
            "first_order_rel": report.first_order_rel,
            "first_order_rel_wrong_force": report.control.first_order_rel if report.control else None,
            "halving_ratio_even": report.halving_ratio_even,
            "halving_ratio_odd": report.halving_ratio_odd,
            "euler_lagrange_residual": report.euler_lagrange_residual,
        })
    return _finish(s.kind, rows, units, summary)


def _run_cross_section(s: Scenario) -> RunResult:
    p = s.parameters
    params = PipelineParams(q2_points=int(p["q2_points"]), q1_points=int(p["q1_points"]), width=p["width"])
    rows = []
    for angle in _as_list(p["angles"]):
        scen = center_of_mass_scenario(p["p"], float(angle), p["c4"], s.units)
        row = {
            "angle": float(angle),
            "closed_form": differential_cross_section(scen),
            "closed_form_exact_jacobian": differential_cross_section(scen, exact_jacobian=True),
        }
        if p["numeric"]:
            for L0 in _as_list(p["L0"]):
                res = numeric_cross_section(scen, float(L0), params)
                rows.append({**row, "L0": float(L0), "numeric": res["value"],
                             "ratio_to_exact_jacobian": res["ratio_to_exact_jacobian"],
                             "ratio_to_closed_form": res["ratio_to_closed_form"]})
        else:
            rows.append(row)
    summary = {"closed_form": rows[0]["closed_form"],
               "closed_form_exact_jacobian": rows[0]["closed_form_exact_jacobian"]}
    ratios = [r["ratio_to_exact_jacobian"] for r in rows if "ratio_to_exact_jacobian" in r]
    if ratios:
        summary["max_ratio_deviation"] = max(abs(r - 1.0) for r in ratios)
    return _finish(s.kind, rows, s.units, summary)


def _run_verify(s: Scenario, threads: int = 1) -> RunResult:
    results = run_verify_suite(_as_list(s.parameters["checks"]) or None,
                               tolerance_scale=s.tolerance or 1.0, threads=threads)
    report = generate_verification_report(results)
    return _finish(s.kind, check_rows(results), s.units, report["totals"],
                   report=format_verification_report(report), passed=report["all_passed"])


RUNNERS = {
    "orbit": _run_orbit,
    "likelihood": _run_likelihood,
    "optimize-g": _run_optimize_g,
    "l0-model": _run_l0_model,
    "cross-section": _run_cross_section,
}


def run_scenario(s: Scenario, threads: int = 1) -> RunResult:
    """Execute one scenario; results depend only on the scenario contents."""
    logger.info(f"Running {s.kind} scenario '{s.name}' ({s.digest()[:12]})")
    if s.kind == "verify":
        return _run_verify(s, threads)
    return RUNNERS[s.kind](s)


def _scalar_summary(summary: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in summary.items() if isinstance(v, (int, float, bool, np.floating, np.integer))}


def sweep(s: Scenario, axis: str, values: Sequence[float], threads: int = 1) -> RunResult:
    """
    Run the scenario once per value of one parameter.

    Args:
        s: base scenario
        axis: parameter to vary
        values: parameter values
        threads: concurrent sweep points

    Returns:
        RunResult with one row per value (scalar summary entries), sorted by
        the axis value; failed points carry the error message.
    """
    if s.kind == "verify":
        raise ScenarioError(["sweep: the verify kind has no sweepable parameters"], s.source)
    if axis not in s.parameters:
        raise ScenarioError([f"sweep: '{axis}' is not a parameter of kind '{s.kind}'"], s.source)

    def point(value):
        sub = replace(s, parameters={**s.parameters, axis: value})
        try:
            res = run_scenario(sub)
            return {axis: value, **_scalar_summary(res.summary), "error": ""}
        except (ClassicalLimitError, ValueError, ArithmeticError) as e:
            logger.warning(f"Sweep point {axis}={value} failed: {e}")
            return {axis: value, "error": f"{type(e).__name__}: {e}"}

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(point, values))
    rows.sort(key=lambda row: row[axis])

    # error column last
    result = _finish(s.kind, rows, s.units, {"axis": axis, "points": len(rows),
                                             "failed": sum(1 for r in rows if r["error"])})
    result.columns = [c for c in result.columns if c != "error"] + ["error"]
    return result
