"""
Born-rule transition amplitudes.
============================================================
Amplitudes I(λ,τ) = |⟨s(λ)|s(τ)⟩| / (‖s(λ)‖‖s(τ)‖) evaluated in the regime
where either the forward or the connected contribution dominates each norm,
the two-body circular-orbit specialization and the coplanar propagation
bound.

Usage:
    from src.likelihood import circular_case, circular_orbit_amplitude

    case = circular_case(r=400.0, g=2e-4, L0=20.0, c4=1.0, units=units)
    print(circular_orbit_amplitude(case, 0.5))
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.special import logsumexp

from src.core_model import TrajectorySet, UnitSystem
from src.errors import ConsistencyError, GeometryError
from src.scalar_products import (
    connected_contribution,
    connected_general,
    forward_contribution,
)

logger = logging.getLogger(__name__)


class Regime(str, Enum):
    PARTICLE_LIKE = "ParticleLike"   # C dominates both norms
    TRANSITION = "Transition"        # F at λ, C at τ
    WAVE_LIKE = "WaveLike"           # F dominates both norms
    FULL = "Full"                    # no approximation


@dataclass
class RegimeParams:
    dominance: float = 100.0           # factor one contribution must exceed the other by
    negligible_forward: float = 1e-6   # |F| < this·c|C| counts as negligible
    violation_tol: float = 1e-9        # amplitudes above 1 + tol are errors


@dataclass
class AmplitudeResult:
    amplitude: float
    regime: Regime
    components: Dict[str, float] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)


def _norm_parts(traj: TrajectorySet, lam: float, L0: float, c2n: float):
    F = forward_contribution(traj, lam, lam, L0, L0).real
    C = connected_contribution(traj, lam, lam, L0, L0).real if c2n else 0.0
    return F, c2n * C


def _dominant(F: float, cC: float, factor: float) -> Optional[str]:
    if cC <= 0 or F >= factor * cC:
        return "F"
    if cC >= factor * F:
        return "C"
    return None


def select_regime(F_lam: float, cC_lam: float, F_tau: float, cC_tau: float, factor: float = 100.0) -> Optional[Regime]:
    """Regime from the dominant term of each norm; None when ambiguous."""
    lam_side = _dominant(F_lam, cC_lam, factor)
    tau_side = _dominant(F_tau, cC_tau, factor)
    return {
        ("C", "C"): Regime.PARTICLE_LIKE,
        ("F", "C"): Regime.TRANSITION,
        ("F", "F"): Regime.WAVE_LIKE,
    }.get((lam_side, tau_side))


def amplitude(
    traj: TrajectorySet,
    lam: float,
    tau: float,
    L0_lam: float,
    L0_tau: float,
    n: Optional[int] = None,
    c2n: float = 0.0,
    regime: Optional[Regime] = None,
    params: Optional[RegimeParams] = None,
) -> AmplitudeResult:
    """
    Transition amplitude in the requested regime.

    Args:
        regime: None selects by comparing F and c·C in each norm; an
            ambiguous comparison falls back to Regime.FULL with a warning.

    Returns:
        AmplitudeResult with the numerator and both norms as components.
    """
    params = params or RegimeParams()
    if n is not None and n != traj.n:
        raise ValueError(f"n={n} does not match the trajectory set (n={traj.n})")
    if c2n < 0:
        raise ValueError(f"c2n must be non-negative, got {c2n}")

    F_lt = forward_contribution(traj, lam, tau, L0_lam, L0_tau)
    C_lt = connected_general(traj, lam, tau, L0_lam, L0_tau) if c2n else 0j
    F_ll, cC_ll = _norm_parts(traj, lam, L0_lam, c2n)
    F_tt, cC_tt = _norm_parts(traj, tau, L0_tau, c2n)

    warnings = []
    if regime is None:
        regime = select_regime(F_ll, cC_ll, F_tt, cC_tt, params.dominance)
        if regime is None:
            msg = (f"Ambiguous regime at λ={lam}, τ={tau}: "
                   f"F/cC = {F_ll / cC_ll:.3e} (λ), {F_tt / cC_tt:.3e} (τ); using Full")
            logger.warning(msg)
            warnings.append(msg)
            regime = Regime.FULL
    if regime in (Regime.PARTICLE_LIKE, Regime.TRANSITION) and not c2n:
        raise ValueError(f"Regime {regime.value} needs a positive c2n")

    if regime == Regime.PARTICLE_LIKE:
        if abs(F_lt) > params.negligible_forward * c2n * abs(C_lt):
            warnings.append("forward contribution not negligible in the numerator")
        value = abs(C_lt) / math.sqrt(cC_ll * cC_tt / c2n ** 2)
    elif regime == Regime.TRANSITION:
        value = math.sqrt(c2n) * abs(C_lt) / math.sqrt(F_ll * cC_tt / c2n)
    elif regime == Regime.WAVE_LIKE:
        value = abs(F_lt + c2n * C_lt) / math.sqrt(F_ll * F_tt)
    else:
        value = abs(F_lt + c2n * C_lt) / math.sqrt((F_ll + cC_ll) * (F_tt + cC_tt))

    if value > 1.0 + params.violation_tol:
        raise ConsistencyError(f"Amplitude {value} exceeds 1 in regime {regime.value} at λ={lam}, τ={tau}")

    return AmplitudeResult(
        amplitude=float(value),
        regime=regime,
        components={
            "F_num": float(abs(F_lt)),
            "C_num": float(abs(C_lt)),
            "norm_lambda": float(F_ll + cC_ll),
            "norm_tau": float(F_tt + cC_tt),
        },
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Two-body circular orbit
# ---------------------------------------------------------------------------

@dataclass
class CircularOrbitCase:
    r: float
    g: float
    L0: float
    c4: float
    a0: float
    a1: float
    k_R: float
    c_R: float
    units: Optional[UnitSystem] = None

    @classmethod
    def from_constants(cls, a0: float, a1: float, c_R: float, L0: float = 1.0,
                       units: Optional[UnitSystem] = None) -> "CircularOrbitCase":
        """Case with prescribed (a0, a1, c_R), back-computing r, g and c4."""
        units = units or UnitSystem.natural()
        lc = units.compton_length
        r = L0 * math.sqrt(8.0 * a0)
        g = a1 * lc ** 2 * r / L0 ** 2
        k_R = c_R * math.sqrt(a1)
        c4 = k_R * 32.0 * math.sqrt(2.0) * L0 / (math.pi * lc)
        return cls(r=r, g=g, L0=L0, c4=c4, a0=a0, a1=a1, k_R=k_R, c_R=c_R, units=units)

    @property
    def omega(self) -> float:
        return math.sqrt(2.0 * self.g / self.r ** 3)


def circular_case(r: float, g: float, L0: float, c4: float, units: UnitSystem) -> CircularOrbitCase:
    """a0 = r²/8L0², a1 = L0²g/λ_c²r, k_R = πc₄λ_c/(32√2L0), c_R = k_R/√a1."""
    lc = units.compton_length
    a0 = r ** 2 / (8.0 * L0 ** 2)
    a1 = L0 ** 2 * g / (lc ** 2 * r)
    k_R = math.pi * c4 * lc / (32.0 * math.sqrt(2.0) * L0)
    c_R = k_R / math.sqrt(a1) if a1 > 0 else math.inf
    if a0 < 10.0:
        logger.warning(f"Circular orbit with a0={a0:.3g}: NRCP needs r ≫ L0")
    return CircularOrbitCase(r=r, g=g, L0=L0, c4=c4, a0=a0, a1=a1, k_R=k_R, c_R=c_R, units=units)


def _log_terms(case: CircularOrbitCase, theta: float) -> List[float]:
    a0, a1 = case.a0, case.a1
    c, s = math.cos(theta), math.sin(theta)
    terms = [
        -a0 * (0.5 * theta ** 2 - c - theta * s) - a1 * (1.0 - c),
        -a0 * (0.5 * theta ** 2 + c + theta * s) - a1 * (1.0 + c),
    ]
    if case.c_R > 0:
        terms.append(math.log(case.c_R) - a0 * (1.0 + 0.5 * theta ** 2))
    return terms


def circular_orbit_amplitude(case: CircularOrbitCase, theta: float) -> float:
    """
    I(θ) for the circular orbit: direct, exchange and connected terms over
    their θ = 0 values. Evaluated in log space so large a0 does not overflow.
    """
    return float(math.exp(logsumexp(_log_terms(case, theta)) - logsumexp(_log_terms(case, 0.0))))


def small_theta_coefficient(case: CircularOrbitCase) -> float:
    """Coefficient a of I ≈ 1 − aθ²."""
    a0, a1, cR = case.a0, case.a1, case.c_R
    e_x = math.exp(-2.0 * a0 - 2.0 * a1)
    e_c = cR * math.exp(-2.0 * a0)
    return (0.5 * a1 + (a0 - 0.5 * a1) * e_x + 0.5 * cR * a0 * math.exp(-2.0 * a0)) / (1.0 + e_x + e_c)


def second_difference(f: Callable[[float], float], x: float = 0.0, h: float = 1e-3) -> float:
    """f''(x) by Richardson-extrapolated central differences."""
    def d2(step):
        return (f(x + step) - 2.0 * f(x) + f(x - step)) / step ** 2
    return (4.0 * d2(h / 2.0) - d2(h)) / 3.0


def amplitude_over_lambda(case: CircularOrbitCase) -> Callable[[float], float]:
    """λ ↦ I(ωλ) for the circular orbit."""
    omega = case.omega
    return lambda lam: circular_orbit_amplitude(case, omega * lam)


# ---------------------------------------------------------------------------
# Coplanar propagation bound
# ---------------------------------------------------------------------------

def coplanar_bound_check(
    amp: Callable[[float], float],
    lam1: float,
    lam2: float,
    segment_amp: Optional[Callable[[float, float], float]] = None,
) -> Dict:
    """
    |amp(λ1+λ2)| ≤ |amp over (λ1, λ1+λ2)|·|amp(λ1)|.

    Without segment_amp the middle factor is amp(λ2), using time-translation
    covariance of the scalar products.
    """
    if lam1 < 0 or lam2 < 0:
        raise ValueError(f"λ1, λ2 must be non-negative, got {lam1}, {lam2}")
    segment = segment_amp or (lambda a, b: amp(b - a))
    lhs = abs(amp(lam1 + lam2))
    rhs = abs(segment(lam1, lam1 + lam2)) * abs(amp(lam1))
    holds = lhs <= rhs * (1.0 + 1e-12)
    if not holds:
        logger.info(f"Coplanar bound violated at λ1={lam1}, λ2={lam2}: {lhs:.6e} > {rhs:.6e}")
    return {"holds": holds, "lhs": lhs, "rhs": rhs}


def coplanar_angles(cos_theta1: float, cos_theta2: float, cos_theta: float, tol: float = 1e-12) -> Dict:
    """
    Out-of-plane angle β of the intermediate state.

    The squared projection of the intermediate state onto the plane of the
    initial and final states is (c1² + c2² − 2c·c1c2)/(1 − c²), which for
    θ1 = θ2 reduces to 2cos²θ1/(1 + cosθ).
    """
    for name, value in (("cos_theta1", cos_theta1), ("cos_theta2", cos_theta2), ("cos_theta", cos_theta)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    c1, c2, c = cos_theta1, cos_theta2, cos_theta
    if c >= 1.0:
        if abs(c1 - c2) > tol:
            raise GeometryError("Initial and final states coincide but θ1 ≠ θ2")
        cos2_beta = 1.0 if c1 >= 1.0 else c1 ** 2
    else:
        cos2_beta = (c1 ** 2 + c2 ** 2 - 2.0 * c * c1 * c2) / (1.0 - c ** 2)
    if cos2_beta > 1.0 + tol:
        raise GeometryError(f"cos²β = {cos2_beta} > 1: angles are not realizable")
    cos2_beta = min(cos2_beta, 1.0)
    return {
        "beta": math.acos(math.sqrt(cos2_beta)),
        "cos2_beta": cos2_beta,
        "bound_ok": c1 * c2 >= c,
    }
