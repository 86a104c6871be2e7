"""
Scalar products of time-translated n-particle minimum-packet states.
============================================================
Closed forms for the forward contribution F(λ,τ) (pairings of two-point
functions) and the connected contribution C(λ,τ) (one connected VEV with
strength c_2n), their norms and the hatted moments they are built from.

Argument order: for λ ≥ τ with Δ = λ − τ the λ state is translated back
to τ, so its packets enter with
    a_k = ξ̇_k(λ),  b_k = ξ_k(λ) − Δ·ξ̇_k(λ),  L = L0(λ),  s_k = −1
and the τ state with a_k = ξ̇_k(τ), b_k = ξ_k(τ), L = L0(τ), s_k = +1.
For λ < τ the conjugate of the (τ, λ) product is returned, so that
⟨λ|τ⟩ = conj⟨τ|λ⟩ holds exactly.

Usage:
    from src.scalar_products import scalar_product

    parts = scalar_product(traj, lam=100.0, tau=0.0, L0_lam=20.0, L0_tau=20.0, c2n=1.0)
    print(abs(parts.total))
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core_model import TrajectorySet, UnitSystem, classical_quantities
from src.errors import ConsistencyError, DegenerateMomentsError
from src.packets import NParticleState, check_nrcp

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
MAX_PAIRING_N = 8


@dataclass
class PacketSide:
    """Packet parameters of one argument of the scalar product; arrays are (..., n, 3)."""
    a: np.ndarray
    b: np.ndarray
    q: np.ndarray
    L: float
    sign: int


@dataclass
class HattedMoments:
    a_sq: np.ndarray
    b_sq: np.ndarray
    a_dot_b: np.ndarray
    a_mean: np.ndarray
    b_mean: np.ndarray
    L_e: float
    L_s: float
    delta_T: np.ndarray
    delta_q: np.ndarray
    n: int = 0
    phi_T: np.ndarray = 0.0       # common phase Δ·Σ_λ ω(q_k)

    @property
    def degenerate(self) -> bool:
        return bool(np.any(np.asarray(self.a_sq) <= 0.0))

    # centred ("v-hat") moments
    @property
    def v_a_sq(self):
        return self.a_sq - self.L_e ** 2 * np.sum(self.a_mean * self.a_mean, axis=-1)

    @property
    def v_b_sq(self):
        return self.b_sq - self.L_e ** 2 * np.sum(self.b_mean * self.b_mean, axis=-1)

    @property
    def v_a_dot_b(self):
        return self.a_dot_b - self.L_e ** 2 * np.sum(self.a_mean * self.b_mean, axis=-1)


@dataclass
class ScalarProductParts:
    forward: complex
    connected: complex
    c2n: float
    theta_F: float
    theta_C: float
    flags: List[str] = field(default_factory=list)

    @property
    def total(self) -> complex:
        return self.forward + self.c2n * self.connected


def interaction_units(n: int, units: UnitSystem) -> str:
    """Units of c_2n: (length)^{2n−4}."""
    return f"{units.length_unit}^{2 * n - 4}"


def sides_from_momenta(
    q_lam,
    q_tau,
    x_lam,
    x_tau,
    L0_lam: float,
    L0_tau: float,
    delta: float,
    units: UnitSystem,
) -> Tuple[PacketSide, PacketSide]:
    """Sides for packets labeled by momenta; velocities are λ_c·q."""
    lc = units.compton_length
    q_lam = np.asarray(q_lam, dtype=float)
    q_tau = np.asarray(q_tau, dtype=float)
    a_lam = lc * q_lam
    a_tau = lc * q_tau
    left = PacketSide(a=a_lam, b=np.asarray(x_lam, dtype=float) - delta * a_lam,
                      q=q_lam, L=L0_lam, sign=-1)
    right = PacketSide(a=a_tau, b=np.asarray(x_tau, dtype=float), q=q_tau, L=L0_tau, sign=+1)
    return left, right


def packet_sides(
    traj: TrajectorySet,
    lam: float,
    tau: float,
    L0_lam: float,
    L0_tau: float,
    q_override: Optional[Tuple[Sequence, Sequence]] = None,
) -> Tuple[PacketSide, PacketSide]:
    """Sides for λ ≥ τ built from the trajectories (nonrelativistic q = ξ̇/λ_c)."""
    if lam < tau:
        raise ValueError(f"packet_sides expects λ ≥ τ, got λ={lam}, τ={tau}")
    lc = traj.units.compton_length
    delta = lam - tau
    x_l, v_l = traj.positions(lam), traj.velocities(lam)
    x_t, v_t = traj.positions(tau), traj.velocities(tau)
    if q_override is not None:
        return sides_from_momenta(q_override[0], q_override[1], x_l, x_t,
                                  L0_lam, L0_tau, delta, traj.units)
    left = PacketSide(a=v_l, b=x_l - delta * v_l, q=v_l / lc, L=L0_lam, sign=-1)
    right = PacketSide(a=v_t, b=x_t, q=v_t / lc, L=L0_tau, sign=+1)
    return left, right


def moments_from_sides(left: PacketSide, right: PacketSide, delta: float, units: UnitSystem) -> HattedMoments:
    """
    Hatted moments of a (λ, τ) pair of sides; the left side carries λ.

    delta_T = (λ_c/2)(Σ|q_τ|² − Σ|q_λ|²) = (T(τ) − T(λ))/λ_c, the opposite
    sign of (T(λ) − T(τ))/λ_c.
    """
    lc = units.compton_length
    n = left.a.shape[-2]
    wl, wr = 1.0 / left.L ** 2, 1.0 / right.L ** 2

    def hat_scalar(yl, yr):
        return (wl * np.sum(yl, axis=-1) + wr * np.sum(yr, axis=-1)) / (2.0 * n)

    def hat_vector(yl, yr):
        return (wl * np.sum(yl, axis=-2) + wr * np.sum(yr, axis=-2)) / (2.0 * n)

    def dot(u, v):
        return np.sum(u * v, axis=-1)

    q2_l = dot(left.q, left.q)
    q2_r = dot(right.q, right.q)
    L_e = math.sqrt(2.0 / (wl + wr))
    return HattedMoments(
        a_sq=hat_scalar(dot(left.a, left.a), dot(right.a, right.a)),
        b_sq=hat_scalar(dot(left.b, left.b), dot(right.b, right.b)),
        a_dot_b=hat_scalar(dot(left.a, left.b), dot(right.a, right.b)),
        a_mean=hat_vector(left.a, right.a),
        b_mean=hat_vector(left.b, right.b),
        L_e=L_e,
        L_s=math.sqrt(left.L ** 2 + right.L ** 2),
        delta_T=0.5 * lc * (np.sum(q2_r, axis=-1) - np.sum(q2_l, axis=-1)),
        delta_q=np.sum(right.q, axis=-2) - np.sum(left.q, axis=-2),
        n=n,
        phi_T=delta * (n / lc + 0.5 * lc * np.sum(q2_l, axis=-1)),
    )


def hatted_moments(
    traj: TrajectorySet,
    lam: float,
    tau: float,
    L0_lam: float,
    L0_tau: float,
    q_override: Optional[Tuple[Sequence, Sequence]] = None,
) -> HattedMoments:
    """
    Hatted moments â², b̂², a·b̂, â, b̂, L_e, L_s, δT, δq of the pair (λ, τ).

    For λ < τ the moments of the (τ, λ) ordering are returned.
    """
    if lam < tau:
        lam, tau, L0_lam, L0_tau = tau, lam, L0_tau, L0_lam
        if q_override is not None:
            q_override = (q_override[1], q_override[0])
    left, right = packet_sides(traj, lam, tau, L0_lam, L0_tau, q_override)
    m = moments_from_sides(left, right, lam - tau, traj.units)
    if m.degenerate:
        logger.warning(f"Degenerate hatted moments at λ={lam}, τ={tau}: â² = 0")
    return m


def trans_inv_sides(traj: TrajectorySet, lam: float, tau: float, L0_lam: float, L0_tau: float) -> Tuple[float, float]:
    """Both sides of â²b̂² − (a·b̂)² written through I, İ, T at λ and τ."""
    m = hatted_moments(traj, lam, tau, L0_lam, L0_tau)
    lhs = float(m.a_sq * m.b_sq - m.a_dot_b ** 2)

    n = traj.n
    cl = classical_quantities(traj, lam)
    ct = classical_quantities(traj, tau)
    nl, nt = n * L0_lam ** 2, n * L0_tau ** 2
    t_l, t_t = cl.T / nl, ct.T / nt
    i_l, i_t = cl.I / nl, ct.I / nt
    d_l, d_t = cl.I_dot / nl, ct.I_dot / nt
    delta = lam - tau
    rhs = (
        (t_l + t_t) * (i_l + i_t)
        - 0.25 * (d_l + d_t) ** 2
        + delta * t_l * d_t
        - delta * t_t * d_l
        + delta ** 2 * t_l * t_t
    )
    return lhs, float(rhs)


# ---------------------------------------------------------------------------
# Connected contribution
# ---------------------------------------------------------------------------

def connected_from_moments(m: HattedMoments):
    """
    General connected contribution for arbitrary (δq, â, b̂).

    Spatial translation ξ → ξ + d multiplies the result by e^{−iδq·d}.
    """
    n = m.n
    v_a = m.v_a_sq
    if np.any(np.asarray(v_a) <= 0.0):
        raise DegenerateMomentsError(f"v̂(a²) must be positive, got {v_a}")
    v_b = m.v_b_sq
    v_ab = m.v_a_dot_b
    Le2 = m.L_e ** 2
    dq = m.delta_q
    D = m.delta_T - Le2 * np.sum(dq * m.a_mean, axis=-1)

    prefactor = (TWO_PI * Le2 / n) ** 1.5 * np.sqrt(TWO_PI / (n * v_a)) / TWO_PI ** 4
    log_mod = (
        -n * (v_a * v_b - v_ab ** 2) / (2.0 * v_a)
        - D ** 2 / (2.0 * n * v_a)
        - Le2 * np.sum(dq * dq, axis=-1) / (2.0 * n)
    )
    phase = m.phi_T - D * v_ab / v_a - Le2 * np.sum(dq * m.b_mean, axis=-1)
    return prefactor * np.exp(log_mod + 1j * phase)


def connected_phase(m: HattedMoments):
    v_a = m.v_a_sq
    D = m.delta_T - m.L_e ** 2 * np.sum(m.delta_q * m.a_mean, axis=-1)
    return m.phi_T - D * m.v_a_dot_b / v_a - m.L_e ** 2 * np.sum(m.delta_q * m.b_mean, axis=-1)


def _check_n(traj: TrajectorySet, n: Optional[int]) -> None:
    if n is not None and n != traj.n:
        raise ValueError(f"n={n} does not match the trajectory set (n={traj.n})")


def connected_contribution(
    traj: TrajectorySet,
    lam: float,
    tau: float,
    L0_lam: float,
    L0_tau: float,
    n: Optional[int] = None,
) -> complex:
    """
    C(λ,τ) in the centre-of-mass frame of momentum-conserving trajectories:

        L_e³ e^{iθ_C} / ((2πn)² √â²) · exp(−n(â²b̂² − (a·b̂)²)/2â²) · exp(−δT²/2nâ²)
    """
    _check_n(traj, n)
    if lam < tau:
        return complex(np.conj(connected_contribution(traj, tau, lam, L0_tau, L0_lam)))
    m = hatted_moments(traj, lam, tau, L0_lam, L0_tau)
    if m.degenerate:
        raise DegenerateMomentsError(f"â² = 0 at λ={lam}, τ={tau}: no kinetic energy on either side")
    n = m.n
    a_sq, b_sq, ab = float(m.a_sq), float(m.b_sq), float(m.a_dot_b)
    dT = float(m.delta_T)
    theta_C = float(m.phi_T) - dT * ab / a_sq
    log_mod = -n * (a_sq * b_sq - ab ** 2) / (2.0 * a_sq) - dT ** 2 / (2.0 * n * a_sq)
    mod = m.L_e ** 3 / ((TWO_PI * n) ** 2 * math.sqrt(a_sq)) * math.exp(log_mod)
    return complex(mod * np.exp(1j * theta_C))


def connected_general(
    traj: TrajectorySet,
    lam: float,
    tau: float,
    L0_lam: float,
    L0_tau: float,
    n: Optional[int] = None,
    q_override: Optional[Tuple[Sequence, Sequence]] = None,
) -> complex:
    """C(λ,τ) for arbitrary δq, â, b̂ (non-conserving momentum labels allowed)."""
    _check_n(traj, n)
    if lam < tau:
        swapped = None if q_override is None else (q_override[1], q_override[0])
        return complex(np.conj(connected_general(traj, tau, lam, L0_tau, L0_lam, q_override=swapped)))
    m = hatted_moments(traj, lam, tau, L0_lam, L0_tau, q_override)
    return complex(connected_from_moments(m))


# ---------------------------------------------------------------------------
# Forward contribution
# ---------------------------------------------------------------------------

def pair_overlap(q_k, h_k, L_k: float, q_j, h_j, L_j: float) -> complex:
    """
    L_k³L_j³ ∫dp e^{−L_k²(p−q_k)² − i(p−q_k)·h_k} e^{−L_j²(p−q_j)² + i(p−q_j)·h_j}

    = (πL_e²/2)^{3/2} exp(−L_e²|q_k−q_j|²/2 − |h_k−h_j|²/4(L_k²+L_j²)) e^{iθ},
    θ = (q_k − q_j)·(L_k²h_j + L_j²h_k)/(L_k² + L_j²).
    """
    q_k, h_k, q_j, h_j = (np.asarray(v, dtype=float) for v in (q_k, h_k, q_j, h_j))
    A = L_k ** 2 + L_j ** 2
    Le2 = 2.0 * L_k ** 2 * L_j ** 2 / A
    dq = q_k - q_j
    dh = h_k - h_j
    theta = dq @ (L_k ** 2 * h_j + L_j ** 2 * h_k) / A
    return complex((math.pi * Le2 / 2.0) ** 1.5 * np.exp(-Le2 * (dq @ dq) / 2.0 - (dh @ dh) / (4.0 * A) + 1j * theta))


def forward_terms_from_sides(
    left: PacketSide,
    right: PacketSide,
    delta: float,
    units: UnitSystem,
) -> Tuple[List[Tuple[int, ...]], np.ndarray]:
    """Per-pairing terms of F; the forward contribution is their sum."""
    lc = units.compton_length
    n = left.a.shape[-2]
    if n > MAX_PAIRING_N:
        logger.warning(f"Forward contribution with n={n} sums {math.factorial(n)} pairings")
    Ll2, Lr2 = left.L ** 2, right.L ** 2
    Ls2 = Ll2 + Lr2
    Le2 = 2.0 * Ll2 * Lr2 / Ls2
    q2_l = np.sum(left.q * left.q, axis=(-2, -1))
    phi_T = delta * (n / lc + 0.5 * lc * q2_l)
    prefactor = (2.0 / lc) ** n * (math.sqrt(Le2) / math.sqrt(TWO_PI)) ** (3 * n)

    perms = list(permutations(range(n)))
    terms = []
    for perm in perms:
        idx = list(perm)
        qj = right.q[..., idx, :]
        hj = right.b[..., idx, :]
        dq = left.q - qj
        dh = left.b - hj
        theta = np.sum(dq * (Ll2 * hj + Lr2 * left.b), axis=(-2, -1)) / Ls2
        expo = (
            -0.5 * Le2 * np.sum(dq * dq, axis=(-2, -1))
            - np.sum(dh * dh, axis=(-2, -1)) / (4.0 * Ls2)
            + 1j * (theta + phi_T)
        )
        terms.append(prefactor * np.exp(expo))
    return perms, np.stack(terms, axis=0)


def forward_pairing_terms(
    traj: TrajectorySet,
    lam: float,
    tau: float,
    L0_lam: float,
    L0_tau: float,
    q_override: Optional[Tuple[Sequence, Sequence]] = None,
) -> Tuple[List[Tuple[int, ...]], np.ndarray]:
    if lam < tau:
        swapped = None if q_override is None else (q_override[1], q_override[0])
        perms, terms = forward_pairing_terms(traj, tau, lam, L0_tau, L0_lam, swapped)
        inverse = [tuple(int(i) for i in np.argsort(p)) for p in perms]
        return inverse, np.conj(terms)
    left, right = packet_sides(traj, lam, tau, L0_lam, L0_tau, q_override)
    return forward_terms_from_sides(left, right, lam - tau, traj.units)


def _stable_sum(values: np.ndarray) -> complex:
    values = np.asarray(values).ravel()
    return complex(math.fsum(values.real), math.fsum(values.imag))


def forward_contribution(
    traj: TrajectorySet,
    lam: float,
    tau: float,
    L0_lam: float,
    L0_tau: float,
    n: Optional[int] = None,
    q_override: Optional[Tuple[Sequence, Sequence]] = None,
) -> complex:
    """
    F(λ,τ) = (2π)^{−3n/2}(2/λ_c)ⁿ L_e^{3n} e^{iθ_F}
             Σ_pairings Π_k e^{−L_e²|q_k−q'_σk|²/2} e^{−|h_k−h'_σk|²/4L_s²} e^{iθ_kσk}
    """
    _check_n(traj, n)
    _, terms = forward_pairing_terms(traj, lam, tau, L0_lam, L0_tau, q_override)
    return _stable_sum(terms)


# ---------------------------------------------------------------------------
# Norms and assembled products
# ---------------------------------------------------------------------------

def forward_norm_constant(n: int, L0: float, units: UnitSystem) -> float:
    """k_F = (2/λ_c)ⁿ (L0/√2π)^{3n}."""
    return (2.0 / units.compton_length) ** n * (L0 / math.sqrt(TWO_PI)) ** (3 * n)


def state_norm_sq(
    traj: TrajectorySet,
    lam: float,
    L0: float,
    n: Optional[int] = None,
    c2n: float = 0.0,
) -> float:
    """‖s(λ)‖² = F(λ,λ) + c_2n·C(λ,λ)."""
    _check_n(traj, n)
    F = forward_contribution(traj, lam, lam, L0, L0)
    C = connected_contribution(traj, lam, lam, L0, L0) if c2n else 0.0
    if abs(F.imag) > 1e-10 * abs(F):
        raise ConsistencyError(f"F(λ,λ) not real: {F}")
    value = F.real + c2n * complex(C).real
    if value < 0:
        raise ConsistencyError(f"Negative norm² {value} at λ={lam}")
    return value


def normalize_state(state: NParticleState, traj: TrajectorySet, lam: float, L0: float, c2n: float) -> NParticleState:
    return state.normalized(state_norm_sq(traj, lam, L0, c2n=c2n))


def scalar_product(
    traj: TrajectorySet,
    lam: float,
    tau: float,
    L0_lam: float,
    L0_tau: float,
    c2n: float,
    n: Optional[int] = None,
    margin: float = 10.0,
) -> ScalarProductParts:
    """Forward and connected parts of ⟨s(λ)|s(τ)⟩ with NRCP flags."""
    _check_n(traj, n)
    F = forward_contribution(traj, lam, tau, L0_lam, L0_tau)
    C = connected_general(traj, lam, tau, L0_lam, L0_tau)
    if lam >= tau:
        m = hatted_moments(traj, lam, tau, L0_lam, L0_tau)
        sign = 1.0
    else:
        m = hatted_moments(traj, tau, lam, L0_tau, L0_lam)
        sign = -1.0
    flags = []
    if not check_nrcp(traj, L0_lam, lam, margin=margin).passed:
        flags.append("nrcp_lambda")
    if not check_nrcp(traj, L0_tau, tau, margin=margin).passed:
        flags.append("nrcp_tau")
    if c2n and abs(C) > 0 and 1e-2 < abs(F) / abs(c2n * C) < 1e2:
        flags.append("intermediate_regime")
    return ScalarProductParts(
        forward=F,
        connected=C,
        c2n=c2n,
        theta_F=sign * float(m.phi_T),
        theta_C=sign * float(connected_phase(m)),
        flags=flags,
    )


# ---------------------------------------------------------------------------
# Two-body circular orbit
# ---------------------------------------------------------------------------

def circular_connected(r: float, g: float, L0: float, lam: float, units: UnitSystem) -> complex:
    """C(λ,0) = k_C exp(−(2r³ + λ²g)/8L0²r), k_C = (L0⁴e^{iθ_C}/8π²)√(r/2g)."""
    lc = units.compton_length
    T = g / (2.0 * r)
    theta_C = lam * (2.0 + T) / lc
    k_C = L0 ** 4 / (8.0 * math.pi ** 2) * math.sqrt(r / (2.0 * g))
    return complex(k_C * math.exp(-(2.0 * r ** 3 + lam ** 2 * g) / (8.0 * L0 ** 2 * r)) * np.exp(1j * theta_C))


def circular_forward_terms(r: float, g: float, L0: float, theta: float, units: UnitSystem) -> Tuple[float, float]:
    """Moduli of the direct and exchange pairings of F(λ,0) at orbit angle θ."""
    lc = units.compton_length
    a0 = r ** 2 / (8.0 * L0 ** 2)
    a1 = L0 ** 2 * g / (lc ** 2 * r)
    k_F = forward_norm_constant(2, L0, units)
    c, s = math.cos(theta), math.sin(theta)
    direct = k_F * math.exp(-a0 * (1.0 + 0.5 * theta ** 2 - c - theta * s) - a1 * (1.0 - c))
    exchange = k_F * math.exp(-a0 * (1.0 + 0.5 * theta ** 2 + c + theta * s) - a1 * (1.0 + c))
    return direct, exchange
