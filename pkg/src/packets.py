"""
Gaussian minimum packets on classical trajectories.
============================================================
Packet functions in momentum and position space, their moments, the
n-particle state label, the nonrelativistic classical particle (NRCP)
bounds and the short-time translation check of a packet along a
Newtonian trajectory.

Fourier convention: φ(x) = (2π)^{-3/2} ∫dp e^{-ip·x} φ̃(p).

Usage:
    from src.packets import MinimumPacket, packet_fourier, check_nrcp

    pkt = MinimumPacket(xi=[0, 0, 0], q=[0.01, 0, 0], L0=20.0, lam=0.0, units=units)
    value = packet_fourier([0.01, 0, 0], pkt)
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from src.core_model import (
    TrajectorySet,
    UnitSystem,
    classical_quantities,
    momentum_of,
    pair_separations,
)
from src.errors import ResolutionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MinimumPacket:
    xi: np.ndarray       # centre (length)
    q: np.ndarray        # central momentum (inverse length)
    L0: float            # momentum spread length
    lam: float           # evolution parameter entering ℓ₀²
    units: UnitSystem
    ell0_sq: complex = field(init=False)

    def __post_init__(self):
        if not self.L0 > 0:
            raise ValueError(f"L0 must be positive, got {self.L0}")
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float).reshape(3))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(3))
        object.__setattr__(
            self, "ell0_sq",
            complex(self.L0 ** 2, -0.5 * self.units.compton_length * self.lam),
        )


@dataclass
class NParticleState:
    packets: List[MinimumPacket]
    units: UnitSystem
    K_s: Optional[float] = None    # set by normalization

    @property
    def n(self) -> int:
        return len(self.packets)

    @classmethod
    def from_trajectory(
        cls,
        traj: TrajectorySet,
        lam: float,
        L0: float,
        spread_lam: float = 0.0,
        nonrelativistic: bool = True,
    ) -> "NParticleState":
        """Packets centred on (ξ_k(λ), q_k(λ)) of every trajectory."""
        x = traj.positions(lam)
        packets = [
            MinimumPacket(
                xi=x[k],
                q=momentum_of(traj, k, lam, nonrelativistic=nonrelativistic),
                L0=L0,
                lam=spread_lam,
                units=traj.units,
            )
            for k in range(traj.n)
        ]
        return cls(packets=packets, units=traj.units)

    def normalized(self, norm_sq: float) -> "NParticleState":
        if not norm_sq > 0:
            raise ValueError(f"Cannot normalize with norm² = {norm_sq}")
        return replace(self, K_s=1.0 / math.sqrt(norm_sq))


@dataclass
class NrcpParams:
    margin: float = 10.0           # "≪" means ratio ≤ 1/margin
    k0: float = 5.0                # packet support multiplier
    points_per_L0: float = 8.0     # minimum grid resolution for oracle transforms


@dataclass
class NrcpReport:
    velocity_ok: bool
    compton_ok: bool
    spread_ok: Optional[bool]      # None when n < 2
    margins: Tuple[float, float, Optional[float]]

    @property
    def passed(self) -> bool:
        return self.velocity_ok and self.compton_ok and self.spread_ok is not False


def packet_fourier(p, pkt: MinimumPacket):
    """φ̃(p) = (L0³/π^{3/2}) exp(−ℓ₀²(p−q)² + i(p−q)·ξ); p may be (..., 3)."""
    dp = np.asarray(p, dtype=float) - pkt.q
    expo = -pkt.ell0_sq * np.sum(dp * dp, axis=-1) + 1j * (dp @ pkt.xi)
    return pkt.L0 ** 3 / math.pi ** 1.5 * np.exp(expo)


def packet_position(x, pkt: MinimumPacket):
    """φ(x) = (2π)^{-3/2}(L0³/ℓ₀³) exp(−(x−ξ)²/4ℓ₀² − iq·x); x may be (..., 3)."""
    x = np.asarray(x, dtype=float)
    dx = x - pkt.xi
    ell3 = pkt.ell0_sq ** 1.5
    expo = -np.sum(dx * dx, axis=-1) / (4.0 * pkt.ell0_sq) - 1j * (x @ pkt.q)
    return (2.0 * math.pi) ** -1.5 * pkt.L0 ** 3 / ell3 * np.exp(expo)


def packet_moments(pkt: MinimumPacket) -> Dict:
    """Means and per-axis variances of |φ(x)|² and |φ̃(p)|²."""
    lc = pkt.units.compton_length
    var_x = pkt.L0 ** 2 + lc ** 2 * pkt.lam ** 2 / (4.0 * pkt.L0 ** 2)
    var_p = 1.0 / (4.0 * pkt.L0 ** 2)
    return {
        "mean_x": pkt.xi.copy(),
        "mean_p": pkt.q.copy(),
        "var_x": var_x,
        "var_p": var_p,
        "heisenberg_product": 0.5 * math.sqrt(1.0 + lc ** 2 * pkt.lam ** 2 / (4.0 * pkt.L0 ** 4)),
    }


def nrcp_separation(traj: TrajectorySet, lam: float) -> Optional[float]:
    """r_a(λ): closest distance between two distinct trajectories."""
    if traj.n < 2:
        return None
    return float(pair_separations(traj.positions(lam)).min())


def check_nrcp(
    traj: TrajectorySet,
    L0: float,
    lam: float,
    margin: Optional[float] = None,
    params: Optional[NrcpParams] = None,
) -> NrcpReport:
    """
    Evaluate the three NRCP bounds at λ.

    Velocity uses the largest of the particle and pairwise relative speeds,
    Compton compares λ_c/L0, spread compares (L0² + λ_c²λ²/4L0²)/r_a².
    """
    params = params or NrcpParams()
    margin = margin if margin is not None else params.margin
    limit = 1.0 / margin
    lc = traj.units.compton_length

    v = traj.velocities(lam)
    speeds = [float(np.linalg.norm(v[k])) for k in range(traj.n)]
    if traj.n >= 2:
        i, j = np.triu_indices(traj.n, k=1)
        speeds.extend(np.linalg.norm(v[i] - v[j], axis=1).tolist())
    velocity_ratio = max(speeds)
    compton_ratio = lc / L0

    r_a = nrcp_separation(traj, lam)
    spread_ratio = None
    spread_ok = None
    if r_a is not None:
        spread_ratio = (L0 ** 2 + lc ** 2 * lam ** 2 / (4.0 * L0 ** 2)) / r_a ** 2
        spread_ok = spread_ratio <= limit

    report = NrcpReport(
        velocity_ok=velocity_ratio <= limit,
        compton_ok=compton_ratio <= limit,
        spread_ok=spread_ok,
        margins=(velocity_ratio, compton_ratio, spread_ratio),
    )
    if not report.passed:
        logger.debug(f"NRCP bounds violated at λ={lam}: {report.margins}")
    return report


def nonrel_duration_bound(traj: TrajectorySet, L0: float, lam: float = 0.0) -> float:
    """λ beyond which the nonrelativistic evaluation of the phase degrades."""
    lc = traj.units.compton_length
    v = traj.velocities(lam)
    vmax2 = float(np.max(np.sum(v * v, axis=1)))
    return (math.pi / (2.0 * lc)) * L0 ** 2 / (lc ** 2 / (4.0 * L0 ** 2) + vmax2)


# ---------------------------------------------------------------------------
# Short-time translation along a trajectory
# ---------------------------------------------------------------------------

@dataclass
class SpatialGrid:
    points: int = 96               # per axis (even)
    k0: float = 5.0                # half-width in units of σ_X
    dispersion: str = "quadratic"  # or "exact"


def _align_deviation(psi: np.ndarray, phi: np.ndarray) -> float:
    """‖ψ − e^{iα}φ‖/‖φ‖ with α minimizing the distance."""
    overlap = np.vdot(phi, psi)
    alpha = np.angle(overlap) if abs(overlap) > 0 else 0.0
    return float(np.linalg.norm(psi - np.exp(1j * alpha) * phi) / np.linalg.norm(phi))


def _translated_packet(
    traj: TrajectorySet,
    k: int,
    L0: float,
    lam: float,
    grid: SpatialGrid,
    dx: float,
    n_pts: int,
) -> np.ndarray:
    """
    Packet labeled by the trajectory at λ, propagated by e^{−iω(p)λ} back to
    the λ = 0 position frame and kicked by e^{iλξ̈·x/λ_c}.
    """
    lc = traj.units.compton_length
    x0 = traj.positions(0.0)[k]
    q0 = momentum_of(traj, k, 0.0, nonrelativistic=True)
    x_lam = traj.positions(lam)[k]
    q_lam = momentum_of(traj, k, lam, nonrelativistic=True)
    cq = classical_quantities(traj, lam) if lam else None

    freqs = 2.0 * math.pi * np.fft.fftfreq(n_pts, d=dx)
    P = np.stack(np.meshgrid(freqs, freqs, freqs, indexing="ij"), axis=-1)
    dq = q_lam - q0
    shift = x_lam - x0
    ell_sq = complex(L0 ** 2, -0.5 * lc * lam)
    d = P - dq
    G = np.exp(-ell_sq * np.sum(d * d, axis=-1) + 1j * (d @ shift))

    if grid.dispersion == "exact":
        p_abs = q0 + P
        omega = np.sqrt(1.0 / lc ** 2 + np.sum(p_abs * p_abs, axis=-1))
        omega0 = math.sqrt(1.0 / lc ** 2 + float(q0 @ q0))
        G = G * np.exp(-1j * lam * (omega - omega0))
    else:
        G = G * np.exp(-0.5j * lam * lc * (2.0 * (P @ q0) + np.sum(P * P, axis=-1)))

    if cq is not None:
        # φ_k(λ) = (1 + e_C/n)λ/λ_c is a global phase
        G = G * np.exp(1j * (1.0 + cq.e_C / traj.n) * lam / lc)

    m = np.arange(n_pts)
    sign = (-1.0) ** m
    sign3 = sign[:, None, None] * sign[None, :, None] * sign[None, None, :]
    dp = 2.0 * math.pi / (n_pts * dx)
    psi = (2.0 * math.pi) ** -1.5 * dp ** 3 * np.fft.fftn(G * sign3)

    if lam:
        xs = (np.arange(n_pts) - n_pts // 2) * dx
        X = np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1)
        accel = traj.accelerations(0.0)[k]
        psi = psi * np.exp(1j * lam * (X @ accel) / lc)
    return psi


def lemma1_shorttime_check(
    traj: TrajectorySet,
    L0: float,
    lam_small: float,
    grid: Optional[SpatialGrid] = None,
    params: Optional[NrcpParams] = None,
) -> float:
    """
    Maximum over particles of the phase-aligned relative L² distance between the
    packet translated along the trajectory by λ_small and the packet at λ = 0.

    The distance is O(λ_small²) for Newtonian trajectories.
    """
    grid = grid or SpatialGrid()
    params = params or NrcpParams()
    lc = traj.units.compton_length
    var_x = L0 ** 2 + lc ** 2 * lam_small ** 2 / (4.0 * L0 ** 2)
    half_width = grid.k0 * math.sqrt(var_x)
    n_pts = int(grid.points) + int(grid.points) % 2
    dx = 2.0 * half_width / n_pts
    if L0 / dx < params.points_per_L0:
        raise ResolutionError(
            f"Grid too coarse: {L0 / dx:.2f} points per L0 (need ≥ {params.points_per_L0})"
        )

    worst = 0.0
    for k in range(traj.n):
        reference = _translated_packet(traj, k, L0, 0.0, grid, dx, n_pts)
        if lam_small == 0.0:
            continue
        moved = _translated_packet(traj, k, L0, lam_small, grid, dx, n_pts)
        worst = max(worst, _align_deviation(moved, reference))
    return worst


# ---------------------------------------------------------------------------
# Gaussian summation, Taylor bound and delta sequence
# ---------------------------------------------------------------------------

def gaussian_sum_closed_form(alpha: complex, beta: complex) -> complex:
    """∫ exp(−αs² + βs) ds = √π e^{β²/4α}/√α for Re α > 0."""
    if not alpha.real > 0:
        raise ValueError(f"Re α must be positive, got {alpha}")
    return math.sqrt(math.pi) * np.exp(beta ** 2 / (4.0 * alpha)) / np.sqrt(complex(alpha))


def gaussian_sum_quadrature(alpha: complex, beta: complex, width: float = 12.0) -> complex:
    centre = beta.real / (2.0 * alpha.real)   # peak of the modulus
    half = width / math.sqrt(alpha.real)

    def f(s):
        return np.exp(-alpha * s * s + beta * s)

    lo, hi = centre - half, centre + half
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    re, _ = quad(lambda s: f(s).real, lo, hi, **opts)
    im, _ = quad(lambda s: f(s).imag, lo, hi, **opts)
    return complex(re, im)


def omega_of(p, units: UnitSystem) -> float:
    """ω(p) = √(1/λ_c² + p²)."""
    p = np.asarray(p, dtype=float)
    return float(np.sqrt(1.0 / units.compton_length ** 2 + p @ p))


def taylor_bound_check(p, q, units: UnitSystem) -> Tuple[float, float]:
    """(|ω(p) − expansion about q|, (λ_c³/4)(p² − q²)²)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    wq = omega_of(q, units)
    d = p - q
    expansion = wq + (q @ d) / wq + (d @ d) / (2.0 * wq)
    lhs = abs(omega_of(p, units) - expansion)
    rhs = units.compton_length ** 3 / 4.0 * (p @ p - q @ q) ** 2
    return float(lhs), float(rhs)


def delta_sequence(s, L0: float):
    """δ_{L0}(s) = (L0/√π) e^{−L0²s²}."""
    s = np.asarray(s, dtype=float)
    return L0 / math.sqrt(math.pi) * np.exp(-(L0 * s) ** 2)


def delta_sequence_error(f: Callable[[float], float], L0: float) -> float:
    """∫δ_{L0}(s) f(s) ds − f(0)."""
    half = 12.0 / L0
    value, _ = quad(lambda s: float(delta_sequence(s, L0)) * f(s), -half, half,
                    epsabs=0.0, epsrel=1e-13, limit=200)
    return value - f(0.0)
