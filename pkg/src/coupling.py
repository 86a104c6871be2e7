"""
Coupling strength from the circular-orbit likelihood.
============================================================
The potential strength g is the one giving the least negative curvature
d²I/dθ²|₀ of the circular-orbit likelihood. Stationarity in a1 is a cubic
in x = 1/√a1; the spread length L0(r) follows the selection rule
L0⁶ = β0·r^{7/2}·e^{−r²/4L0²}, which makes g independent of r.

Usage:
    from src.coupling import optimize_g

    result = optimize_g(r=1e4, c4=1.0, units=UnitSystem.natural(), beta0=1e12)
    print(result["g"], result["x"])
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.optimize import brentq

from src.core_model import UnitSystem
from src.errors import NoSolutionError
from src.likelihood import CircularOrbitCase, circular_case

logger = logging.getLogger(__name__)

TWELVE_OVER_E = 12.0 / math.e


def second_derivative_from_constants(a0: float, a1: float, c_R: float, simplified: bool = False) -> float:
    e_c = c_R * math.exp(-2.0 * a0)
    if simplified:
        return (-a1 - c_R * a0 * math.exp(-2.0 * a0)) / (1.0 + e_c)
    e_x = math.exp(-2.0 * a0 - 2.0 * a1)
    return (-a1 - (2.0 * a0 - a1) * e_x - c_R * a0 * math.exp(-2.0 * a0)) / (1.0 + e_x + e_c)


def second_derivative_at_zero(case: CircularOrbitCase) -> float:
    """d²I/dθ² at θ = 0."""
    return second_derivative_from_constants(case.a0, case.a1, case.c_R)


def second_derivative_simplified(case: CircularOrbitCase) -> float:
    """d²I/dθ²|₀ with e^{−2a0−2a1} dropped against 1."""
    return second_derivative_from_constants(case.a0, case.a1, case.c_R, simplified=True)


def curvature_in_a1(a0: float, k_R: float, a1: float, simplified: bool = False) -> float:
    """d²I/dθ²|₀ at fixed (a0, k_R) as a function of a1 (c_R = k_R/√a1)."""
    return second_derivative_from_constants(a0, a1, k_R / math.sqrt(a1), simplified)


@dataclass
class CubicProblem:
    """x³ + a·x + b = 0 for x = 1/√a1."""
    a0: float
    k_R: float
    a: float = field(init=False)
    b: float = field(init=False)
    log_neg_b: float = field(init=False)

    def __post_init__(self):
        if not self.k_R > 0:
            raise NoSolutionError(f"No stationary coupling for k_R = {self.k_R}")
        if not self.a0 > 0:
            raise ValueError(f"a0 must be positive, got {self.a0}")
        self.a = -3.0 / self.a0
        self.log_neg_b = math.log(2.0) + 2.0 * self.a0 - math.log(self.k_R * self.a0)
        self.b = -math.exp(self.log_neg_b) if self.log_neg_b < 700.0 else -math.inf

    @classmethod
    def from_case(cls, case: CircularOrbitCase) -> "CubicProblem":
        return cls(a0=case.a0, k_R=case.k_R)

    def scale(self) -> float:
        """(−b)^{1/3}, the weak-coupling root."""
        return math.exp(self.log_neg_b / 3.0)

    def residual(self, x: float) -> float:
        return x ** 3 + self.a * x + self.b

    def relative_residual(self, x: float) -> float:
        """|x³ + ax + b|/|b| evaluated in units of (−b)^{1/3}."""
        s = self.scale()
        y = x / s
        return abs(y ** 3 + (self.a / s ** 2) * y - 1.0)


def solve_cubic(prob: CubicProblem) -> float:
    """
    Positive real root x = A + B with
    A³, B³ = e^{2a0}/(k_R a0) ± √(e^{4a0}/(k_R a0)² − 1/a0³).

    Solved for y = x/(−b)^{1/3}, which keeps e^{2a0} out of the arithmetic;
    B is taken from A·B = −a/3. With a negative discriminant the
    trigonometric form gives the largest of the three real roots.
    """
    s = prob.scale()
    p = prob.a / s ** 2
    disc = 0.25 + (p / 3.0) ** 3
    if disc >= 0:
        A = np.cbrt(0.5 + math.sqrt(disc))
        y = A - p / (3.0 * A)
    else:
        m = 2.0 * math.sqrt(-p / 3.0)
        y = m * math.cos(math.acos(3.0 / (p * m) * -1.0) / 3.0)
    # one Newton step polishes the cancellation in A + B
    y -= (y ** 3 + p * y - 1.0) / (3.0 * y ** 2 + p)
    return float(s * y)


def weak_coupling_root(prob: CubicProblem) -> float:
    """x ≈ (2e^{2a0}/(k_R a0))^{1/3}, valid when a0·e^{4a0} ≫ k_R²."""
    return prob.scale()


def g_from_c4(r: float, L0: float, c4: float, units: UnitSystem) -> float:
    """g = (πc₄λ_c⁴r^{7/2}e^{−r²/4L0²}/(512√2L0⁶))^{2/3}."""
    lc = units.compton_length
    if not (r > 10.0 * L0 and L0 > 10.0 * lc):
        logger.warning(f"g_from_c4 outside r ≫ L0 ≫ λ_c: r={r:.3e}, L0={L0:.3e}, λ_c={lc:.3e}")
    if c4 < 0:
        raise NoSolutionError(f"No real coupling for c4 = {c4} < 0")
    if c4 == 0:
        return 0.0
    log_g = (2.0 / 3.0) * (
        math.log(math.pi * c4 / (512.0 * math.sqrt(2.0)))
        + 4.0 * math.log(lc) + 3.5 * math.log(r) - r ** 2 / (4.0 * L0 ** 2) - 6.0 * math.log(L0)
    )
    return math.exp(log_g)


# ---------------------------------------------------------------------------
# L0(r) selection rule
# ---------------------------------------------------------------------------

@dataclass
class L0SelectionRule:
    beta0: float = 1.0   # length^{5/2}

    def log_residual(self, L0: float, r: float) -> float:
        """ln(L0⁶) − ln(β0 r^{7/2} e^{−r²/4L0²})."""
        return 6.0 * math.log(L0) + r ** 2 / (4.0 * L0 ** 2) - math.log(self.beta0) - 3.5 * math.log(r)


def existence_bound(rule: L0SelectionRule) -> float:
    """r ≲ (12/e)^{6/5} β0^{2/5}."""
    return TWELVE_OVER_E ** 1.2 * rule.beta0 ** 0.4


def existence_scan(rule: L0SelectionRule, r_lo: float = 1e-12, r_hi: Optional[float] = None) -> float:
    """Largest r with a real root, by bisection on the minimum of the log residual."""
    def has_root(r):
        return rule.log_residual(r / math.sqrt(12.0), r) <= 0.0

    r_hi = r_hi or 1e3 * existence_bound(rule)
    if not has_root(r_lo):
        return 0.0
    lo, hi = math.log(r_lo), math.log(r_hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if has_root(math.exp(mid)):
            lo = mid
        else:
            hi = mid
    return math.exp(lo)


def solve_l0_selection(rule: L0SelectionRule, r: float) -> List[float]:
    """All positive roots of L0⁶ = β0 r^{7/2} e^{−r²/4L0²}, ascending."""
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")

    def h(s):
        return rule.log_residual(math.exp(s), r)

    s_min = math.log(r / math.sqrt(12.0))
    h_min = h(s_min)
    if h_min > 0:
        logger.debug(f"No L0 for r={r:.4e} (bound {existence_bound(rule):.4e})")
        return []
    if h_min == 0:
        return [math.exp(s_min)]

    roots = []
    for direction in (-1.0, 1.0):
        step = 1.0
        while h(s_min + direction * step) <= 0:
            step *= 2.0
        a, b = sorted((s_min, s_min + direction * step))
        roots.append(math.exp(brentq(h, a, b, xtol=1e-15, rtol=4.5e-16, maxiter=500)))
    return sorted(roots)


def g_independent_of_r(rule: L0SelectionRule, c4: float, units: UnitSystem) -> float:
    """g = (πλ_c⁴c₄/(512√2β0))^{2/3}."""
    lc = units.compton_length
    return (math.pi * lc ** 4 * c4 / (512.0 * math.sqrt(2.0) * rule.beta0)) ** (2.0 / 3.0)


def optimize_g(
    r: float,
    c4: float,
    units: UnitSystem,
    L0: Optional[float] = None,
    beta0: Optional[float] = None,
) -> Dict:
    """
    Coupling g maximizing the curvature of the circular-orbit likelihood.

    Args:
        L0: spread length; when omitted, the smaller root of the selection
            rule with β0 is used.

    Returns:
        Dictionary with g (weak-coupling and exact-root values), a0, a1, x,
        k_R, c_R and residual diagnostics.
    """
    if L0 is None:
        if beta0 is None:
            raise ValueError("optimize_g needs L0 or beta0")
        roots = solve_l0_selection(L0SelectionRule(beta0), r)
        if not roots:
            raise NoSolutionError(
                f"No L0 solves the selection rule at r={r:.4e} (bound {existence_bound(L0SelectionRule(beta0)):.4e})"
            )
        L0 = roots[0]

    lc = units.compton_length
    g_weak = g_from_c4(r, L0, c4, units)
    a0 = r ** 2 / (8.0 * L0 ** 2)
    k_R = math.pi * c4 * lc / (32.0 * math.sqrt(2.0) * L0)
    prob = CubicProblem(a0=a0, k_R=k_R)
    x = solve_cubic(prob)
    a1 = 1.0 / x ** 2
    g_root = a1 * lc ** 2 * r / L0 ** 2
    final = circular_case(r, g_root, L0, c4, units)

    result = {
        "r": r,
        "L0": L0,
        "c4": c4,
        "g": g_root,
        "g_weak_coupling": g_weak,
        "a0": final.a0,
        "a1": final.a1,
        "x": x,
        "x_weak_coupling": weak_coupling_root(prob),
        "k_R": final.k_R,
        "c_R": final.c_R,
        "cubic_residual": prob.relative_residual(x),
        "curvature": second_derivative_at_zero(final),
        "weak_coupling_valid": math.log(a0) + 4.0 * a0 > math.log(1e4) + 2.0 * math.log(k_R),
    }
    if beta0 is not None:
        result["beta0"] = beta0
        result["g_r_independent"] = g_independent_of_r(L0SelectionRule(beta0), c4, units)
    return result
