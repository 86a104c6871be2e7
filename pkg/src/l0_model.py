"""
Dynamic momentum-spread length.
============================================================
Particle-like initial states evolving to wave-like final states have an
amplitude that depends only on L0(τ), T(τ) and the final kinetic energy
T_inf. Choosing L0 = L0(T, V) so that ∂I/∂T = ∂I/∂V gives an ODE for the
T-dependence, whose dominant-regime solution is

    L0(T, V) = g(T+V)/g(e_C) · (T ln(c_L/T)/4α)^{1/2} / (T − T_inf),  α = 1/2λ_c².

Usage:
    from src.l0_model import L0Dynamics, l0_solution, validity_domain

    dyn = L0Dynamics.from_initial(T0=5e-3, T_inf=1e-3, e_C=1e-3, L0_initial=1e4, units=units)
    print(l0_solution(2e-3, dyn.e_C - 2e-3, dyn))
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp

from src.core_model import (
    PairPotential,
    TrajectorySet,
    UnitSystem,
    classical_quantities,
    integrate_newton,
    pair_accelerations,
    potential_energy,
)
from src.errors import ClassicalLimitError, DomainError, SingularPointError
from src.scalar_products import connected_contribution

logger = logging.getLogger(__name__)


@dataclass
class L0Dynamics:
    T_inf: float
    e_C: float
    L0_initial: float
    log_c_L: float                   # ln c_L; c_L itself overflows for αL0² ≫ 1
    units: UnitSystem
    g_profile: Optional[Callable[[float], float]] = None   # s = T+V ↦ g(s); constant when None
    divergence_guard: float = 1e-3   # warn when (T − T_inf) < guard·T_inf

    @property
    def alpha(self) -> float:
        return 0.5 / self.units.compton_length ** 2

    @property
    def c_L(self) -> float:
        return math.exp(self.log_c_L) if self.log_c_L < 700.0 else math.inf

    def g(self, s: float) -> float:
        return 1.0 if self.g_profile is None else float(self.g_profile(s))

    @property
    def alpha_g(self) -> float:
        return self.g(self.e_C) ** 2 * self.alpha

    @classmethod
    def from_initial(
        cls,
        T0: float,
        T_inf: float,
        e_C: float,
        L0_initial: float,
        units: UnitSystem,
        g_profile: Optional[Callable[[float], float]] = None,
    ) -> "L0Dynamics":
        """Fix c_L so that l0_solution(T0) = L0_initial on shell."""
        if not T0 > T_inf:
            raise DomainError(f"Initial kinetic energy {T0} must exceed T_inf={T_inf}")
        alpha = 0.5 / units.compton_length ** 2
        log_c_L = math.log(T0) + 4.0 * alpha * L0_initial ** 2 * (T0 - T_inf) ** 2 / T0
        return cls(T_inf=T_inf, e_C=e_C, L0_initial=L0_initial, log_c_L=log_c_L,
                   units=units, g_profile=g_profile)


def exponential_profile(kappa: float, e_C: float) -> Callable[[float], float]:
    """g(s) = exp(κ(s − e_C))."""
    return lambda s: math.exp(kappa * (s - e_C))


@dataclass
class ValidityReport:
    rho: Optional[float]
    rho_max: float
    valid: Optional[bool]
    reasons: List[str] = field(default_factory=list)


@dataclass
class StationarityReport:
    epsilon: float
    ratio: float                     # max |δJ|/ε over directions and signs
    first_order: List[float]         # dδJ/dε at 0, extrapolated from ±ε and ±ε/2
    first_order_predicted: List[float]   # ∫ E·η dτ with E the Euler–Lagrange expression
    first_order_scale: float         # ∫ |I_T ξ̇·η̇| + |I_V ∇V·η| dτ, largest over directions
    first_order_rel: float           # max |first_order| / first_order_scale
    second_order: List[float]        # even parts of δJ divided by ε²
    halving_ratio_even: float
    halving_ratio_odd: float
    euler_lagrange_residual: float   # displayed-form residual at the midpoint
    stationary: Optional[bool] = None
    control: Optional["StationarityReport"] = None   # same check on a wrong-force path
    skipped: bool = False
    reasons: List[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Wave-like amplitude
# ---------------------------------------------------------------------------

def wave_amplitude_constant(n: int, units: UnitSystem) -> float:
    """k_I = (1/π)(8/n)^{3/4}(λ_c/2)^{n/2}."""
    return (8.0 / n) ** 0.75 * (0.5 * units.compton_length) ** (0.5 * n) / math.pi


def log_transition_amplitude_wave(T_tau: float, T_inf: float, L0_tau: float, n: int, c2n: float,
                                  units: UnitSystem) -> float:
    if not T_tau > 0:
        raise DomainError(f"Kinetic energy must be positive, got T={T_tau}")
    alpha = 0.5 / units.compton_length ** 2
    return (
        0.5 * math.log(c2n) + math.log(wave_amplitude_constant(n, units))
        + 2.0 * math.log(L0_tau) - 0.25 * math.log(T_tau)
        - alpha * L0_tau ** 2 * (T_tau - T_inf) ** 2 / T_tau
    )


def transition_amplitude_wave(T_tau: float, T_inf: float, L0_tau: float, n: int, c2n: float,
                              units: UnitSystem) -> float:
    """I = √c2n·k_I·(L0²/T^{1/4})·exp(−α(L0²/T)(T − T_inf)²)."""
    return math.exp(log_transition_amplitude_wave(T_tau, T_inf, L0_tau, n, c2n, units))


def transition_amplitude_from_products(
    traj: TrajectorySet,
    lam: float,
    tau: float,
    L0_lam: float,
    L0_tau: float,
    c2n: float,
) -> float:
    """√c2n (λ_c/2)^{n/2} |C(λ,τ)| / C(τ,τ)^{1/2} from the closed-form connected contribution."""
    lc = traj.units.compton_length
    C_lt = abs(connected_contribution(traj, lam, tau, L0_lam, L0_tau))
    C_tt = abs(connected_contribution(traj, tau, tau, L0_tau, L0_tau))
    return math.sqrt(c2n) * (0.5 * lc) ** (0.5 * traj.n) * C_lt / math.sqrt(C_tt)


# ---------------------------------------------------------------------------
# L0(T, V) and its ODE
# ---------------------------------------------------------------------------

def dominance_ratio(T: float, L0: float, dyn: L0Dynamics) -> float:
    """αL0²(T − T_inf)²/T; the dominant regime is ≫ 1."""
    return dyn.alpha * L0 ** 2 * (T - dyn.T_inf) ** 2 / T


def _check_kinetic(T: float, dyn: L0Dynamics) -> None:
    if not T > dyn.T_inf:
        raise DomainError(f"T={T} must exceed T_inf={dyn.T_inf}")
    if T - dyn.T_inf < dyn.divergence_guard * dyn.T_inf:
        logger.warning(f"L0 approaching its divergence: T − T_inf = {T - dyn.T_inf:.3e}")


def l0_solution(T: float, V: float, dyn: L0Dynamics) -> float:
    _check_kinetic(T, dyn)
    log_ratio = dyn.log_c_L - math.log(T)
    if log_ratio <= 0:
        raise DomainError(f"ln(c_L/T) = {log_ratio} ≤ 0 at T={T}")
    scale = dyn.g(T + V) / dyn.g(dyn.e_C)
    return scale * math.sqrt(T * log_ratio / (4.0 * dyn.alpha)) / (T - dyn.T_inf)


def l0_solution_from_initial(T: float, L0_initial: float, T0: float, dyn: L0Dynamics) -> float:
    """
    L0 in terms of L0(0), T(0) with c_L eliminated:

        L0(0)·(T0−T_inf)/(T−T_inf)·(T/T0)^{1/2}·(1 + T0 ln(T0/T)/(4αL0(0)²(T0−T_inf)²))^{1/2}
    """
    _check_kinetic(T, dyn)
    d0 = T0 - dyn.T_inf
    inner = 1.0 + T0 * math.log(T0 / T) / (4.0 * dyn.alpha * L0_initial ** 2 * d0 ** 2)
    if inner <= 0:
        raise DomainError(f"ln(c_L/T) ≤ 0 at T={T}")
    return L0_initial * d0 / (T - dyn.T_inf) * math.sqrt(T / T0) * math.sqrt(inner)


def ode_coefficient(T: float, L0: float, dyn: L0Dynamics) -> float:
    """1 − αL0²(T − T_inf)²/T, the factor multiplying (2/f)df/dT."""
    return 1.0 - dominance_ratio(T, L0, dyn)


def ode_rhs(T: float, f: float, dyn: L0Dynamics) -> float:
    """
    df/dT from (1 − αL0²(T−T_inf)²/T)(2/f)f' = 1/4T + αL0²(T² − T_inf²)/T²
    with L0 = f·g(e_C) on shell.
    """
    L0 = f * dyn.g(dyn.e_C)
    coef = ode_coefficient(T, L0, dyn)
    if abs(coef) < 1e-12:
        raise SingularPointError(f"ODE coefficient vanishes at T={T}, L0={L0}")
    rhs = 0.25 / T + dyn.alpha * L0 ** 2 * (T ** 2 - dyn.T_inf ** 2) / T ** 2
    return 0.5 * f * rhs / coef


def ode_rhs_dominant(T: float, f: float, dyn: L0Dynamics) -> float:
    """df/dT ≈ −1/(8α_g(T−T_inf)²f) − (T+T_inf)f/(2T(T−T_inf))."""
    d = T - dyn.T_inf
    return -1.0 / (8.0 * dyn.alpha_g * d ** 2 * f) - (T + dyn.T_inf) * f / (2.0 * T * d)


def integrate_l0(
    dyn: L0Dynamics,
    T0: float,
    T1: float,
    dominant: bool = False,
    points: int = 50,
    rtol: float = 1e-11,
) -> Dict:
    """
    Integrate the ODE for f from (T0, L0_initial/g(e_C)) to T1 and compare
    with l0_solution along the way.
    """
    rhs = ode_rhs_dominant if dominant else ode_rhs
    f0 = dyn.L0_initial / dyn.g(dyn.e_C)
    T_eval = np.linspace(T0, T1, points)
    sol = solve_ivp(lambda T, y: [rhs(T, y[0], dyn)], (T0, T1), [f0],
                    method="DOP853", rtol=rtol, atol=0.0, t_eval=T_eval)
    if sol.status != 0:
        raise SingularPointError(f"L0 ODE integration stopped: {sol.message}")
    L0_ode = sol.y[0] * dyn.g(dyn.e_C)
    closed = np.array([l0_solution(T, dyn.e_C - T, dyn) for T in sol.t])
    rel = np.abs(L0_ode - closed) / closed
    return {
        "T": sol.t,
        "L0_ode": L0_ode,
        "L0_closed_form": closed,
        "max_rel_error": float(rel.max()),
    }


def validity_domain(T_inf: float, L0: float, units: UnitSystem, rho: Optional[float] = None) -> ValidityReport:
    """
    ρ_max = (1 + √(1 + 4αL0²T_inf))/(2αL0²T_inf); ρ = |V(τ)|/T_inf must exceed it
    for the ODE coefficient to be negative.
    """
    if not T_inf > 0:
        raise ValueError(f"T_inf must be positive, got {T_inf}")
    x = 0.5 * (L0 / units.compton_length) ** 2 * T_inf
    rho_max = (1.0 + math.sqrt(1.0 + 4.0 * x)) / (2.0 * x)
    reasons = []
    valid = None
    if rho is not None:
        valid = rho > rho_max
        if not valid:
            reasons.append(f"rho={rho:.4g} ≤ rho_max={rho_max:.4g}: coefficient not negative definite")
    if L0 < 10.0 * units.compton_length:
        reasons.append(f"αL0² = {x / T_inf:.3g} is not ≫ 1")
    return ValidityReport(rho=rho, rho_max=rho_max, valid=valid, reasons=reasons)


# ---------------------------------------------------------------------------
# Checks along trajectories
# ---------------------------------------------------------------------------

def _log_amplitude_tv(T: float, V: float, dyn: L0Dynamics, n: int, c2n: float) -> float:
    L0 = l0_solution(T, V, dyn)
    return log_transition_amplitude_wave(T, dyn.T_inf, L0, n, c2n, dyn.units)


def _derivative(f: Callable[[float], float], x: float, h: float) -> float:
    """Central difference with one Richardson step."""
    def d(step):
        return (f(x + step) - f(x - step)) / (2.0 * step)
    return (4.0 * d(h / 2.0) - d(h)) / 3.0


def partial_derivative_check(T: float, V: float, dyn: L0Dynamics, n: int = 2, c2n: float = 1.0,
                             h: Optional[float] = None) -> Dict:
    """
    ∂ln I/∂T and ∂ln I/∂V by finite differences with L0 = l0_solution(T, V).
    Equal log-derivatives are equal partials of I.
    """
    h = h or 1e-4 * (T - dyn.T_inf)
    d_T = _derivative(lambda t: _log_amplitude_tv(t, V, dyn, n, c2n), T, h)
    d_V = _derivative(lambda v: _log_amplitude_tv(T, v, dyn, n, c2n), V, h)
    L0 = l0_solution(T, V, dyn)
    scale = abs(0.25 / T + dyn.alpha * L0 ** 2 * (1.0 - dyn.T_inf ** 2 / T ** 2))
    return {
        "dlogI_dT": d_T,
        "dlogI_dV": d_V,
        "rel_diff": abs(d_T - d_V) / max(abs(d_T), abs(d_V), 1e-300),
        "rel_to_scale": abs(d_T - d_V) / scale,
    }


def amplitude_along(traj: TrajectorySet, dyn: L0Dynamics, tau: float, n: Optional[int] = None,
                    c2n: float = 1.0) -> Dict:
    cq = classical_quantities(traj, tau)
    L0 = l0_solution(cq.T, cq.V, dyn)
    n = n or traj.n
    return {
        "tau": tau,
        "T": cq.T,
        "V": cq.V,
        "L0": L0,
        "I": transition_amplitude_wave(cq.T, dyn.T_inf, L0, n, c2n, dyn.units),
    }


def amplitude_rate(traj: TrajectorySet, dyn: L0Dynamics, tau: float, n: Optional[int] = None,
                   c2n: float = 1.0, h: float = 1.0) -> float:
    """(dI/dτ)/I along the trajectory with the L0 model."""
    n = n or traj.n

    def log_i(t):
        cq = classical_quantities(traj, t)
        return _log_amplitude_tv(cq.T, cq.V, dyn, n, c2n)

    return _derivative(log_i, tau, h)


def escape_trajectory(
    rho: float,
    T_inf: float,
    g: float,
    units: UnitSystem,
    span: float,
    tol: Optional[float] = None,
) -> TrajectorySet:
    """
    Two bodies receding along x from r = g/(ρT_inf) with ṙ = 2√((1+ρ)T_inf),
    so that T = (1+ρ)T_inf, |V| = ρT_inf and e_C = T_inf.
    """
    r0 = g / (rho * T_inf)
    rdot = 2.0 * math.sqrt((1.0 + rho) * T_inf)
    x0 = [[0.5 * r0, 0.0, 0.0], [-0.5 * r0, 0.0, 0.0]]
    v0 = [[0.5 * rdot, 0.0, 0.0], [-0.5 * rdot, 0.0, 0.0]]
    traj = integrate_newton(x0, v0, PairPotential.inverse_r(g), (0.0, span), tol=tol, units=units)
    traj.label = "escape"
    return traj


def euler_lagrange_residual(
    traj: TrajectorySet,
    dyn: L0Dynamics,
    tau: float,
    potential: Optional[PairPotential] = None,
    n: Optional[int] = None,
    c2n: float = 1.0,
    h: float = 1.0,
) -> float:
    """
    max_k |(ξ̈_k + ∂V/∂ξ_k)∂I/∂T + ξ̇_k(Ṫ + V̇)∂²I/∂T²| / scale, divided by I.

    ξ̈ comes from the trajectory, V from `potential` (the trajectory's own
    potential by default), so a trajectory driven by another force shows a
    nonzero residual.

    This form vanishes whenever Newton's law holds and e_C is conserved. It is
    not the first variation of ∫I dτ, whose Euler–Lagrange expression
    ∂I/∂V·∂V/∂ξ − d(∂I/∂T·ξ̇)/dτ carries the opposite sign on the potential
    term; lemma4_stationarity_check measures that variation directly.
    """
    potential = potential or traj.potential
    n = n or traj.n

    def energies(t):
        x, v = traj.positions(t), traj.velocities(t)
        return 0.5 * float(np.sum(v * v)), potential_energy(x, potential)

    T, V = energies(tau)
    L_T = _derivative(lambda t: _log_amplitude_tv(t, V, dyn, n, c2n), T, 1e-4 * (T - dyn.T_inf))
    L_TT = _derivative(
        lambda t: _derivative(lambda s: _log_amplitude_tv(s, V, dyn, n, c2n), t, 1e-3 * (T - dyn.T_inf)),
        T, 1e-3 * (T - dyn.T_inf),
    )
    I_T = L_T
    I_TT = L_T ** 2 + L_TT

    x, v = traj.positions(tau), traj.velocities(tau)
    acc_traj = (traj.velocities(tau + h) - traj.velocities(tau - h)) / (2.0 * h)
    grad_V = -pair_accelerations(x, potential)
    e_dot = _derivative(lambda t: sum(energies(t)), tau, h)

    residual = (acc_traj + grad_V) * I_T + v * e_dot * I_TT
    scale = np.linalg.norm(grad_V, axis=1).max() * abs(I_T) + 1e-300
    return float(np.linalg.norm(residual, axis=1).max() / scale)


def _bump(s: np.ndarray):
    """sin⁴(πs) on [0, 1] and its s-derivative; zero with its derivative at both ends."""
    return np.sin(np.pi * s) ** 4, 4.0 * np.pi * np.sin(np.pi * s) ** 3 * np.cos(np.pi * s)


def _scaled_potential(potential: PairPotential, factor: float) -> PairPotential:
    if potential.kind == "inverse_r":
        return PairPotential.inverse_r(factor * potential.g)
    func = potential.func
    return PairPotential.custom(lambda r: factor * float(func(r)))


def _skipped_report(eps: float, reasons: List[str]) -> StationarityReport:
    return StationarityReport(
        epsilon=eps, ratio=math.nan, first_order=[], first_order_predicted=[],
        first_order_scale=math.nan, first_order_rel=math.nan, second_order=[],
        halving_ratio_even=math.nan, halving_ratio_odd=math.nan,
        euler_lagrange_residual=math.nan, skipped=True, reasons=reasons,
    )


def lemma4_stationarity_check(
    traj: TrajectorySet,
    dyn: L0Dynamics,
    eps: float,
    tau_a: float,
    tau_b: float,
    n: Optional[int] = None,
    c2n: float = 1.0,
    rho: Optional[float] = None,
    nodes: int = 64,
    axes: Sequence[int] = (0, 1),
    potential: Optional[PairPotential] = None,
    control_scale: Optional[float] = 2.0,
    stationary_tol: float = 1e-4,
) -> StationarityReport:
    """
    First variation of J[ξ] = ∫_{τa}^{τb} I(T, V) dτ under fixed-endpoint bumps.

    Each variation moves particle 0 by +εη(τ)e and particle 1 by −εη(τ)e
    (centre of mass fixed). J(±ε) and J(±ε/2) give the odd and even parts of
    δJ. The odd parts are extrapolated to dδJ/dε at ε = 0 and compared with
    ∫ E·η dτ, where E = ∂I/∂V·∂V/∂ξ − ∂I/∂T·ξ̈ − ξ̇·d(∂I/∂T)/dτ. The path
    counts as stationary when that first-order term is below stationary_tol
    relative to the size of its two pieces, ∫|∂I/∂T ξ̇·η̇| and ∫|∂I/∂V ∇V·η|.

    With a constant coupling I depends on T alone along a Newtonian path and
    E reduces to −d(∂I/∂T·ξ̇)/dτ, so escape orbits are reported as not
    stationary; free straight-line motion is stationary.

    When control_scale is set, the same check also runs on the path driven by
    control_scale times the force from the state at τa, with V still taken
    from `potential`, and is stored in `control`.

    Returns:
        StationarityReport; skipped when the validity domain is violated.
    """
    n = n or traj.n
    potential = potential or traj.potential
    if rho is None:
        rho = abs(potential_energy(traj.positions(tau_a), potential)) / dyn.T_inf
    validity = validity_domain(dyn.T_inf, dyn.L0_initial, dyn.units, rho)
    if validity.valid is False:
        logger.warning(f"Stationarity check skipped: {validity.reasons}")
        return _skipped_report(eps, validity.reasons)

    z, w = leggauss(nodes)
    span = tau_b - tau_a
    taus = tau_a + 0.5 * span * (z + 1.0)
    weights = 0.5 * span * w
    eta, deta_ds = _bump((taus - tau_a) / span)
    deta = deta_ds / span
    X = np.array([traj.positions(t) for t in taus])
    Vel = np.array([traj.velocities(t) for t in taus])
    Acc = np.array([traj.accelerations(t) for t in taus])

    def energies(x, v):
        return 0.5 * float(np.sum(v * v)), potential_energy(x, potential)

    def log_i_profile(x, v):
        out = np.empty(len(taus))
        for m in range(len(taus)):
            out[m] = _log_amplitude_tv(*energies(x[m], v[m]), dyn, n, c2n)
        return out

    base = log_i_profile(X, Vel)
    top = base.max()
    i0 = np.exp(base - top)

    def log_partials(T, V):
        h = 1e-4 * (T - dyn.T_inf)
        return (
            _derivative(lambda t: _log_amplitude_tv(t, V, dyn, n, c2n), T, h),
            _derivative(lambda u: _log_amplitude_tv(T, u, dyn, n, c2n), V, h),
        )

    def i_T(t):
        # ∂I/∂T in units of e^top
        T, V = energies(traj.positions(t), traj.velocities(t))
        return math.exp(_log_amplitude_tv(T, V, dyn, n, c2n) - top) * log_partials(T, V)[0]

    edge = min(taus.min() - tau_a, tau_b - taus.max())
    h_tau = min(1e-4 * span, 0.5 * edge)
    I_T = np.empty(len(taus))
    I_V = np.empty(len(taus))
    dI_T = np.empty(len(taus))
    grad_V = np.empty_like(X)
    for m, t in enumerate(taus):
        l_T, l_V = log_partials(*energies(X[m], Vel[m]))
        I_T[m], I_V[m] = i0[m] * l_T, i0[m] * l_V
        dI_T[m] = _derivative(i_T, float(t), h_tau)
        grad_V[m] = -pair_accelerations(X[m], potential)
    euler = I_V[:, None, None] * grad_V - I_T[:, None, None] * Acc - dI_T[:, None, None] * Vel

    def direction(axis):
        d = np.zeros((traj.n, 3))
        d[0, axis], d[1, axis] = 1.0, -1.0
        return d

    def delta_J(e, d):
        x = X + e * eta[:, None, None] * d[None]
        v = Vel + e * deta[:, None, None] * d[None]
        return float(np.sum(weights * i0 * np.expm1(log_i_profile(x, v) - base)))

    first, predicted, scales, second = [], [], [], []
    even_ratios, odd_ratios, ratio = [], [], 0.0
    for axis in axes:
        d = direction(axis)
        dp, dm = delta_J(eps, d), delta_J(-eps, d)
        hp, hm = delta_J(0.5 * eps, d), delta_J(-0.5 * eps, d)
        odd, even = 0.5 * (dp - dm), 0.5 * (dp + dm)
        odd_h, even_h = 0.5 * (hp - hm), 0.5 * (hp + hm)
        first.append((8.0 * odd_h - odd) / (3.0 * eps))
        predicted.append(float(np.sum(weights * eta * np.einsum("mkj,kj->m", euler, d))))
        pieces = (np.abs(I_T * deta * np.einsum("mkj,kj->m", Vel, d))
                  + np.abs(I_V * eta * np.einsum("mkj,kj->m", grad_V, d)))
        scales.append(float(np.sum(weights * pieces)))
        second.append(even / eps ** 2)
        if even_h:
            even_ratios.append(even / even_h)
        if odd_h:
            odd_ratios.append(odd / odd_h)
        ratio = max(ratio, abs(dp) / eps, abs(dm) / eps)

    scale = max(scales)
    rel = max(abs(f) for f in first) / scale if scale > 0 else 0.0
    unit = math.exp(top)
    logger.debug(f"First variation {rel:.3e} of scale over [{tau_a}, {tau_b}]")

    reasons = list(validity.reasons)
    control = None
    if control_scale is not None:
        try:
            driven = integrate_newton(
                traj.positions(tau_a), traj.velocities(tau_a),
                _scaled_potential(traj.potential, control_scale),
                (tau_a, tau_b), tol=1e-12, units=traj.units,
            )
            driven.label = "control"
            control = lemma4_stationarity_check(
                driven, dyn, eps, tau_a, tau_b, n=n, c2n=c2n, rho=rho, nodes=nodes, axes=axes,
                potential=potential, control_scale=None, stationary_tol=stationary_tol,
            )
        except ClassicalLimitError as exc:
            logger.warning(f"Control path failed: {exc}")
            reasons.append(f"control path failed: {exc}")

    mid = 0.5 * (tau_a + tau_b)
    return StationarityReport(
        epsilon=eps,
        ratio=ratio * unit,
        first_order=[f * unit for f in first],
        first_order_predicted=[p * unit for p in predicted],
        first_order_scale=scale * unit,
        first_order_rel=rel,
        second_order=[s * unit for s in second],
        halving_ratio_even=float(np.mean(even_ratios)) if even_ratios else math.nan,
        halving_ratio_odd=float(np.mean(odd_ratios)) if odd_ratios else math.nan,
        euler_lagrange_residual=euler_lagrange_residual(traj, dyn, mid, potential=potential, n=n, c2n=c2n),
        stationary=rel < stationary_tol,
        control=control,
        reasons=reasons,
    )
