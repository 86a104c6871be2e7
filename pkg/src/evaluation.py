"""
Verification suite for the classical-limit computations.
============================================================
Each check compares a closed form against an independent numerical
evaluation (quadrature, ODE integration, finite differences) or against a
reference constant, and reports the worst deviation next to its
threshold.

Checks included:
- Gaussian sums, translation identity and pairwise overlaps
- Connected contribution against a two-layer quadrature oracle
- Kepler orbits against the integrator
- Validity domain, gravitational constant and coupling optimization
- Circular-orbit likelihood and the coplanar propagation bound
- L0 model (ODE, partial derivatives, stationarity, slow variation)
- Plane-wave cross section and packet moments

Usage:
    from src.evaluation import run_verify_suite, generate_verification_report

    results = run_verify_suite(threads=4)
    print(format_verification_report(generate_verification_report(results)))
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core_model import (
    AMU_KG,
    KeplerOrbit,
    PairPotential,
    UnitSystem,
    circular_two_body,
    free_trajectories,
    gravity_length,
    integrate_newton,
    kepler_comparison,
    kepler_initial_state,
)
from src.coupling import (
    CubicProblem,
    L0SelectionRule,
    curvature_in_a1,
    existence_bound,
    existence_scan,
    g_from_c4,
    g_independent_of_r,
    solve_cubic,
    solve_l0_selection,
    weak_coupling_root,
)
from src.l0_model import (
    L0Dynamics,
    amplitude_rate,
    escape_trajectory,
    exponential_profile,
    integrate_l0,
    lemma4_stationarity_check,
    partial_derivative_check,
    transition_amplitude_from_products,
    transition_amplitude_wave,
    validity_domain,
)
from src.likelihood import (
    CircularOrbitCase,
    amplitude_over_lambda,
    circular_orbit_amplitude,
    coplanar_bound_check,
    second_difference,
    small_theta_coefficient,
)
from src.oracles import connected_layered_check, packet_moments_oracle, pair_overlap_oracle
from src.packets import (
    MinimumPacket,
    gaussian_sum_closed_form,
    gaussian_sum_quadrature,
    omega_of,
    packet_moments,
)
from src.scalar_products import hatted_moments, packet_sides, pair_overlap, trans_inv_sides
from src.scattering import (
    PipelineParams,
    center_of_mass_scenario,
    differential_cross_section,
    numeric_cross_section,
)

logger = logging.getLogger(__name__)

SEED = 20240917


@dataclass
class CheckResult:
    name: str
    description: str
    passed: bool
    value: float              # worst observed deviation
    threshold: float
    details: Dict = field(default_factory=dict)
    elapsed_sec: float = 0.0
    error: Optional[str] = None


CheckFn = Callable[[float], Tuple[float, float, bool, Dict]]


# ---------------------------------------------------------------------------
# Individual checks. Each takes the tolerance scale and returns
# (value, threshold, passed, details).
# ---------------------------------------------------------------------------

def check_gaussian_sum(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(50):
        re = rng.uniform(0.5, 2.0)
        alpha = complex(re, rng.uniform(-re, re))
        beta = complex(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0))
        closed = gaussian_sum_closed_form(alpha, beta)
        numeric = gaussian_sum_quadrature(alpha, beta)
        worst = max(worst, abs(numeric - closed) / abs(closed))
    threshold = 1e-10 * scale
    return worst, threshold, worst < threshold, {"cases": 50}


def check_translation_identity(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    rng = np.random.default_rng(SEED + 1)
    units = UnitSystem.natural()
    worst = 0.0
    for _ in range(100):
        traj = free_trajectories(rng.uniform(-1.0, 1.0, (3, 3)), rng.uniform(-0.1, 0.1, (3, 3)), units)
        tau, lam = sorted(rng.uniform(0.0, 5.0, 2))
        L_lam, L_tau = rng.uniform(0.5, 2.0, 2)
        lhs, rhs = trans_inv_sides(traj, lam, tau, L_lam, L_tau)
        m = hatted_moments(traj, lam, tau, L_lam, L_tau)
        worst = max(worst, abs(lhs - rhs) / abs(float(m.a_sq * m.b_sq)))
    threshold = 1e-12 * scale
    return worst, threshold, worst < threshold, {"snapshots": 100, "normalized_by": "a_sq*b_sq"}


def check_pair_overlap(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    for _ in range(3):
        q_k, h_k, q_j, h_j = (rng.uniform(-1.0, 1.0, 3) for _ in range(4))
        L_k, L_j = rng.uniform(1.0, 2.0, 2)
        closed = pair_overlap(q_k, h_k, L_k, q_j, h_j, L_j)
        numeric = pair_overlap_oracle(q_k, h_k, L_k, q_j, h_j, L_j)
        worst = max(worst, abs(numeric - closed) / abs(closed))
    threshold = 1e-8 * scale
    return worst, threshold, worst < threshold, {"cases": 3}


def layered_scenarios(units: Optional[UnitSystem] = None) -> List[Tuple[str, object, object, float]]:
    """(label, left side, right side, λ − τ) for the connected-contribution oracle."""
    units = units or UnitSystem.natural()
    lc = units.compton_length
    circ = circular_two_body(20.0, 0.5, units)
    free = free_trajectories(
        [[3.0, 1.0, 0.0], [-3.0, -1.0, 0.0]],
        [[0.05, 0.02, 0.01], [-0.05, -0.02, -0.01]],
        units,
    )
    orbit = KeplerOrbit.from_eccentricity(L=1.0, g=0.05, eps_r=0.3)
    x0, v0 = kepler_initial_state(orbit)
    kepler = integrate_newton(x0, v0, PairPotential.inverse_r(0.05), (0.0, 10.0), units=units)
    shifted = (
        kepler.velocities(5.0) / lc + np.array([[0.2, 0.0, 0.0], [0.1, -0.1, 0.0]]),
        kepler.velocities(0.0) / lc,
    )
    return [
        ("circular orbit", *packet_sides(circ, 3.0, 0.0, 2.0, 2.0), 3.0),
        ("free pair, unequal L0", *packet_sides(free, 2.0, 0.0, 1.5, 2.0), 2.0),
        ("kepler orbit, shifted momenta", *packet_sides(kepler, 5.0, 0.0, 1.0, 1.2, q_override=shifted), 5.0),
    ]


def check_connected_oracle(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    units = UnitSystem.natural()
    details, worst, worst_reduction = {}, 0.0, 0.0
    for label, left, right, delta in layered_scenarios(units):
        res = connected_layered_check(left, right, delta, units)
        details[label] = {
            "rel_error": res["rel_error"],
            "p_reduction_max_rel_error": res["p_reduction_max_rel_error"],
        }
        worst = max(worst, res["rel_error"])
        worst_reduction = max(worst_reduction, res["p_reduction_max_rel_error"])
    threshold = 1e-4 * scale
    passed = worst < threshold and worst_reduction < 1e-6 * scale
    details["p_reduction_threshold"] = 1e-6 * scale
    return worst, threshold, passed, details


def check_kepler(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    units = UnitSystem.natural()
    details, worst, drift = {}, 0.0, 0.0
    circular_variation = 0.0
    for eps in (0.0, 0.3, 0.9):
        orbit = KeplerOrbit.from_eccentricity(L=1.0, g=1e-3, eps_r=eps)
        res = kepler_comparison(orbit, units, tol=1e-12)
        details[f"eps_r={eps}"] = {
            "max_rel_error": res["max_rel_error"],
            "max_e_C_drift": res["max_e_C_drift"],
        }
        worst = max(worst, res["max_rel_error"])
        drift = max(drift, res["max_e_C_drift"])
        if eps == 0.0:
            circular_variation = res["radius_variation"]
    threshold = 1e-6 * scale
    details["circular_radius_variation"] = circular_variation
    passed = worst < threshold and circular_variation < 1e-8 * scale and drift < 1e-9 * scale
    return worst, threshold, passed, details


def check_validity_domain(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    units = UnitSystem.from_mass(1e-8)
    lc = units.compton_length
    cases = [(1e4 * lc, 0.073), (1e2 * lc, 51.0)]
    details, worst = {}, 0.0
    for L0, expected in cases:
        rho_max = validity_domain(4e-6, L0, units).rho_max
        rounded = float(f"{rho_max:.2g}")
        details[f"L0={L0 / lc:.0e} lambda_c"] = {"rho_max": rho_max, "expected": expected}
        worst = max(worst, abs(rounded - expected) / expected)
    return worst, 0.0, worst == 0.0, details


def check_gravity_constant(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    g = gravity_length(UnitSystem.from_mass(AMU_KG))
    reference = 1.3e-54
    dev = abs(g - reference) / reference
    threshold = 0.06 * scale
    return dev, threshold, dev < threshold, {"g_m": g, "reference_m": reference}


def check_cubic(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    residual, weak_dev, stationary = 0.0, 0.0, True
    for a0 in (4.0, 8.0, 16.0, 32.0):
        for k_R in (1e-3, 0.1, 1.0):
            prob = CubicProblem(a0=a0, k_R=k_R)
            x = solve_cubic(prob)
            residual = max(residual, prob.relative_residual(x))
            weak_dev = max(weak_dev, abs(weak_coupling_root(prob) - x) / x)
            a1 = 1.0 / x ** 2
            peak = curvature_in_a1(a0, k_R, a1, simplified=True)
            for d in (1e-3, 1e-2, 1e-1):
                for side in (1.0 - d, 1.0 + d):
                    if curvature_in_a1(a0, k_R, a1 * side, simplified=True) > peak:
                        stationary = False
    threshold = 1e-10 * scale
    passed = residual < threshold and weak_dev < 1e-2 * scale and stationary
    return residual, threshold, passed, {
        "weak_coupling_max_rel_dev": weak_dev,
        "root_is_maximum": stationary,
    }


def coplanar_grid() -> List[Tuple[CircularOrbitCase, float]]:
    cases = []
    for a0 in (2.0, 4.0, 8.0, 16.0):
        for frac in (0.05, 0.2, 0.5):
            for c_R in (0.0, 0.3, 0.9):
                case = CircularOrbitCase.from_constants(a0, frac * a0, c_R)
                for theta in (0.25, 0.5, 1.0, 2.0, 3.0, 4.0):
                    cases.append((case, theta))
    return cases


def check_circular_orbit(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    case = CircularOrbitCase.from_constants(a0=12.0, a1=3.0, c_R=0.3)
    fd = second_difference(lambda t: circular_orbit_amplitude(case, t))
    coef = small_theta_coefficient(case)
    dev = abs(fd + 2.0 * coef) / (2.0 * coef)

    worst_tail, violations = 0.0, 0
    grid = coplanar_grid()
    for case_i, theta in grid:
        worst_tail = max(worst_tail, circular_orbit_amplitude(case_i, 4.0))
        half = 0.5 * theta / case_i.omega
        if not coplanar_bound_check(amplitude_over_lambda(case_i), half, half)["holds"]:
            violations += 1
    threshold = 1e-6 * scale
    passed = dev < threshold and worst_tail < 1e-3 and violations == 0
    return dev, threshold, passed, {
        "small_theta_coefficient": coef,
        "max_I_at_theta_4": worst_tail,
        "coplanar_points": len(grid),
        "coplanar_violations": violations,
    }


def check_l0_selection(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    units = UnitSystem.natural()
    rule = L0SelectionRule(beta0=1e12)
    g_ref = g_independent_of_r(rule, 1.0, units)
    variation = 0.0
    for r in (1e3, 1e4, 1e5, 3e5):
        roots = solve_l0_selection(rule, r)
        for L0 in roots:
            variation = max(variation, abs(g_from_c4(r, L0, 1.0, units) / g_ref - 1.0))
    cutoff_ratio = existence_scan(rule) / existence_bound(rule)
    threshold = 1e-6 * scale
    passed = variation < threshold and 0.5 <= cutoff_ratio <= 2.0
    return variation, threshold, passed, {"g": g_ref, "cutoff_ratio": cutoff_ratio}


def escape_setup(units: Optional[UnitSystem] = None, span: float = 1e4):
    """Receding pair with ρ = 5 and its L0 dynamics (L0 = 100 at τ = 0)."""
    units = units or UnitSystem.natural()
    T_inf = 1e-4
    traj = escape_trajectory(5.0, T_inf, 5.0, units, span, tol=1e-12)
    dyn = L0Dynamics.from_initial(6.0 * T_inf, T_inf, T_inf, 100.0, units)
    return traj, dyn


def check_l0_model(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    units = UnitSystem.natural()
    dyn = L0Dynamics.from_initial(5e-3, 1e-3, 1e-3, 1e4, units)
    ode_error = integrate_l0(dyn, 5e-3, 1.5e-3)["max_rel_error"]

    profiled = L0Dynamics.from_initial(5e-3, 1e-3, 1e-3, 2.5e4, units,
                                       g_profile=exponential_profile(1e3, 1e-3))
    partial = partial_derivative_check(3e-3, 1e-3 - 3e-3, profiled)["rel_diff"]

    traj, esc = escape_setup(units)
    report = lemma4_stationarity_check(traj, esc, 1.0, 0.0, 1e4, control_scale=2.0)
    control = report.control
    free = free_trajectories(traj.positions(0.0), traj.velocities(0.0), units)
    free_report = lemma4_stationarity_check(free, esc, 1.0, 0.0, 1e4, rho=5.0, control_scale=None)
    rate = abs(amplitude_rate(traj, esc, 5e3))

    el_wrong = control.euler_lagrange_residual if control is not None else math.nan

    def prediction_gap(rep) -> float:
        gaps = [abs(a - p) for a, p in zip(rep.first_order, rep.first_order_predicted)]
        return max(gaps) / rep.first_order_scale

    gaps = [prediction_gap(report), prediction_gap(free_report)]
    if control is not None:
        gaps.append(prediction_gap(control))
    newton_first = max(abs(a) for a in report.first_order)
    control_first = max(abs(a) for a in control.first_order) if control is not None else math.nan

    ratios = []
    for ratio in (1e2, 1e3, 1e4):
        lam = 1e3
        T_tau = 0.5 * float(np.sum(traj.velocities(0.0) ** 2))
        T_lam = 0.5 * float(np.sum(traj.velocities(lam) ** 2))
        prod = transition_amplitude_from_products(traj, lam, 0.0, ratio * lam, 100.0, 1.0)
        wave = transition_amplitude_wave(T_tau, T_lam, 100.0, 2, 1.0, units)
        ratios.append(prod / wave * 4.0 ** 0.75)
    product_dev = max(abs(r - 1.0) for r in ratios)

    threshold = 1e-4 * scale
    passed = (
        control is not None
        and ode_error < threshold
        and partial < 1e-6 * scale
        and max(gaps) < 1e-4 * scale
        and free_report.stationary
        and control_first > 1.5 * newton_first
        and rate < 1e-4
        and report.euler_lagrange_residual < 1e-3
        and el_wrong > 0.1
        and product_dev < 1e-2
    )
    return ode_error, threshold, passed, {
        "partial_derivative_rel_diff": partial,
        "first_order_vs_euler_lagrange": max(gaps),
        "first_order_rel_newtonian": report.first_order_rel,
        "first_order_rel_wrong_force": control.first_order_rel if control is not None else math.nan,
        "first_order_rel_free": free_report.first_order_rel,
        "newtonian_stationary": report.stationary,
        "even_part_halving_ratio": report.halving_ratio_even,
        "odd_part_halving_ratio": report.halving_ratio_odd,
        "amplitude_rate": rate,
        "euler_lagrange_newtonian": report.euler_lagrange_residual,
        "euler_lagrange_wrong_force": el_wrong,
        "product_to_wave_ratio_x4^(3/4)": ratios,
    }


def check_cross_section(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    units = UnitSystem.natural()
    angles = (0.3, 0.7, 1.2, 2.0, 2.8)
    values = [differential_cross_section(center_of_mass_scenario(0.03, a, 1.0, units)) for a in angles]
    spread = (max(values) - min(values)) / abs(values[0])

    scen = center_of_mass_scenario(0.03, 1.2, 1.0, units)
    res = numeric_cross_section(scen, 1e4, PipelineParams())
    omega_sq = (units.compton_length * omega_of(scen.q_in[0], units)) ** 2
    shell_dev = abs(res["shell"] / (res["closed_form_exact_jacobian"] * omega_sq) - 1.0)
    dev = abs(res["ratio_to_exact_jacobian"] - 1.0)
    threshold = 0.02 * scale
    passed = dev < threshold and spread < 1e-12 and shell_dev < 1e-6 * scale
    return dev, threshold, passed, {
        "angle_spread": spread,
        "numeric": res["value"],
        "closed_form": res["closed_form"],
        "closed_form_exact_jacobian": res["closed_form_exact_jacobian"],
        "shell_quadrature": res["shell"],
        "shell_vs_exact_jacobian": shell_dev,
        "numeric_to_closed_form": res["ratio_to_closed_form"],
        "closed_form_to_shell": res["closed_form_to_shell"],
    }


def check_packet_moments(scale: float = 1.0) -> Tuple[float, float, bool, Dict]:
    units = UnitSystem.natural()
    pkt = MinimumPacket(xi=[0.3, -0.2, 0.1], q=[0.5, 0.0, -0.4], L0=1.3, lam=0.7, units=units)
    closed = packet_moments(pkt)
    numeric = packet_moments_oracle(pkt)
    worst = max(
        float(np.max(np.abs(numeric["var_x"] / closed["var_x"] - 1.0))),
        float(np.max(np.abs(numeric["var_p"] / closed["var_p"] - 1.0))),
        float(np.max(np.abs(numeric["mean_x"] - closed["mean_x"]))),
        float(np.max(np.abs(numeric["mean_p"] - closed["mean_p"]))),
    )
    at_rest = packet_moments(MinimumPacket(xi=[0, 0, 0], q=[0, 0, 0], L0=1.3, lam=0.0, units=units))
    heisenberg = abs(at_rest["heisenberg_product"] - 0.5)
    threshold = 1e-8 * scale
    return worst, threshold, worst < threshold and heisenberg < 1e-15, {"heisenberg_deviation": heisenberg}


CHECKS: Dict[str, Tuple[str, CheckFn]] = {
    "gaussian_sum": ("Complex Gaussian sum vs quadrature", check_gaussian_sum),
    "translation_identity": ("Translation-invariant moment identity", check_translation_identity),
    "pair_overlap": ("Pairwise overlap vs 3-d quadrature", check_pair_overlap),
    "connected_oracle": ("Connected contribution vs layered quadrature", check_connected_oracle),
    "kepler": ("Kepler orbits vs integrator", check_kepler),
    "validity_domain": ("Validity-domain reference numbers", check_validity_domain),
    "gravity_constant": ("g for 1 amu", check_gravity_constant),
    "cubic": ("Coupling cubic root and stationarity", check_cubic),
    "circular_orbit": ("Circular-orbit likelihood and coplanar bound", check_circular_orbit),
    "l0_selection": ("L0 selection rule and r-independent g", check_l0_selection),
    "l0_model": ("L0 model: ODE, partials, stationarity", check_l0_model),
    "cross_section": ("Plane-wave cross section", check_cross_section),
    "packet_moments": ("Packet moments vs quadrature", check_packet_moments),
}


def run_check(name: str, scale: float = 1.0) -> CheckResult:
    description, fn = CHECKS[name]
    start = time.time()
    try:
        value, threshold, passed, details = fn(scale)
        error = None
    except Exception as e:
        logger.error(f"Check {name} raised: {e}")
        value, threshold, passed, details, error = math.nan, math.nan, False, {}, f"{type(e).__name__}: {e}"
    elapsed = time.time() - start
    logger.info(f"{name}: {'pass' if passed else 'FAIL'} ({value:.3e} vs {threshold:.1e}, {elapsed:.1f}s)")
    return CheckResult(
        name=name,
        description=description,
        passed=bool(passed),
        value=float(value),
        threshold=float(threshold),
        details=details,
        elapsed_sec=round(elapsed, 3),
        error=error,
    )


def run_verify_suite(
    names: Optional[Sequence[str]] = None,
    tolerance_scale: float = 1.0,
    threads: int = 1,
) -> List[CheckResult]:
    """
    Run the named checks (all by default) and return results in registry order.

    Args:
        names: subset of CHECKS keys
        tolerance_scale: multiplies every numerical threshold
        threads: worker threads; checks are independent
    """
    names = list(names) if names else list(CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"Unknown checks: {unknown}. Available: {list(CHECKS)}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda n: run_check(n, tolerance_scale), names))
    return [run_check(n, tolerance_scale) for n in names]


def check_rows(results: List[CheckResult]) -> List[Dict]:
    """Flat rows (one per check) for CSV output."""
    return [
        {
            "check": r.name,
            "passed": r.passed,
            "value": r.value,
            "threshold": r.threshold,
            "elapsed_sec": r.elapsed_sec,
            "error": r.error or "",
        }
        for r in results
    ]


def generate_verification_report(results: List[CheckResult]) -> Dict:
    """
    Summary of a suite run.

    Returns:
        Dictionary with per-check results, pass counts and the overall verdict
    """
    passed = [r for r in results if r.passed]
    return {
        "checks": [asdict(r) for r in results],
        "totals": {
            "num_checks": len(results),
            "num_passed": len(passed),
            "num_failed": len(results) - len(passed),
            "elapsed_sec": round(sum(r.elapsed_sec for r in results), 2),
        },
        "all_passed": len(passed) == len(results),
    }


def format_verification_report(report: Dict) -> str:
    """
    Format a verification report as readable text.

    Args:
        report: output of generate_verification_report

    Returns:
        Formatted string for display
    """
    lines = [
        "=" * 60,
        "   CLASSICAL LIMIT VERIFICATION REPORT",
        "=" * 60,
        "",
        "📊 CHECKS",
    ]
    for check in report["checks"]:
        mark = "✅" if check["passed"] else "❌"
        lines.append(f"   {mark} {check['name']:<22} {check['value']:.3e} (threshold {check['threshold']:.1e})")
        if check["error"]:
            lines.append(f"      {check['error']}")
    totals = report["totals"]
    lines += [
        "",
        "📈 TOTALS",
        f"   Passed:             {totals['num_passed']} / {totals['num_checks']}",
        f"   Elapsed:            {totals['elapsed_sec']}s",
        "",
        "🏆 VERDICT",
        f"   {'ALL CHECKS PASSED' if report['all_passed'] else 'SOME CHECKS FAILED'}",
        "",
        "=" * 60,
    ]
    return "\n".join(lines)
