"""
Plane-wave limits and the elastic cross section.
============================================================
Large-L0 minimum packets approach plane waves. The forward overlap becomes a
δ-sequence in the momenta, the plane-wave projection is idempotent in the
limit, and the non-forward connected contribution C(λ,−λ) concentrates on
energy-momentum conservation, which gives the nonrelativistic elastic
cross section

    dσ/dΩ ≈ (c₄²/8π)(λ_c/2)²(π/2)³     (independent of the scattering angle)

Usage:
    from src.scattering import center_of_mass_scenario, differential_cross_section

    scen = center_of_mass_scenario(p=0.03, angle=1.0, c4=1.0, units=UnitSystem.natural())
    print(differential_cross_section(scen))
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import permutations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, trapezoid

from src.core_model import UnitSystem
from src.errors import RelativisticInputError
from src.packets import omega_of
from src.scalar_products import (
    connected_from_moments,
    forward_norm_constant,
    forward_terms_from_sides,
    moments_from_sides,
    sides_from_momenta,
)

logger = logging.getLogger(__name__)

NONREL_LIMIT = 0.1   # largest λ_c|q| treated as nonrelativistic


@dataclass
class PlaneWaveScenario:
    q_in: np.ndarray    # (2, 3) incoming momenta q3, q4
    q_out: np.ndarray   # (2, 3) outgoing momenta q1, q2
    c4: float
    units: UnitSystem

    def __post_init__(self):
        self.q_in = np.asarray(self.q_in, dtype=float).reshape(-1, 3)
        self.q_out = np.asarray(self.q_out, dtype=float).reshape(-1, 3)
        if self.q_in.shape != self.q_out.shape:
            raise ValueError(f"q_in {self.q_in.shape} and q_out {self.q_out.shape} differ in shape")

    @property
    def n(self) -> int:
        return self.q_in.shape[0]

    def max_velocity(self) -> float:
        q = np.vstack([self.q_in, self.q_out])
        return float(self.units.compton_length * np.linalg.norm(q, axis=1).max())

    def is_forward(self, tol: float = 1e-12) -> bool:
        """True when q_out is a permutation of q_in."""
        scale = max(float(np.abs(self.q_in).max()), 1e-300)
        return any(
            np.allclose(self.q_out[list(p)], self.q_in, rtol=0.0, atol=tol * scale)
            for p in permutations(range(self.n))
        )


@dataclass
class PipelineParams:
    q2_points: int = 25     # grid points per axis of the q2 cell
    q1_points: int = 33     # grid points in |q1|
    width: float = 6.0      # half-width of both grids in units of 1/L0
    lam: float = 0.0        # λ of C(λ, −λ)


def center_of_mass_scenario(p: float, angle: float, c4: float, units: UnitSystem) -> PlaneWaveScenario:
    """q3 = −q4 = p·x̂ scattered into q1 = −q2 at `angle` in the x-y plane."""
    q3 = np.array([p, 0.0, 0.0])
    q1 = p * np.array([math.cos(angle), math.sin(angle), 0.0])
    return PlaneWaveScenario(q_in=np.array([q3, -q3]), q_out=np.array([q1, -q1]), c4=c4, units=units)


def _check_nonrelativistic(scen: PlaneWaveScenario) -> None:
    v = scen.max_velocity()
    if v >= NONREL_LIMIT:
        raise RelativisticInputError(f"λ_c|q| = {v:.3g} is not ≪ 1")


# ---------------------------------------------------------------------------
# Forward overlap and projection idempotence
# ---------------------------------------------------------------------------

def plane_wave_overlap(q, q_prime, L0: float, units: UnitSystem) -> complex:
    """
    ⟨s(λ;(q′)ₙ)|s(λ;(q)ₙ)⟩ forward part at equal times,
    k_F Σ_pairings Π_k e^{−L0²(q′_k − q_σk)²/2}.
    """
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    q_prime = np.asarray(q_prime, dtype=float).reshape(-1, 3)
    zero = np.zeros_like(q)
    left, right = sides_from_momenta(q_prime, q, zero, zero, L0, L0, 0.0, units)
    _, terms = forward_terms_from_sides(left, right, 0.0, units)
    return complex(np.sum(terms))


def projection_kernel(grid: np.ndarray, L0: float) -> np.ndarray:
    """One axis of the plane-wave projection: (L0/√2π) e^{−L0²(q−q′)²/2} times the cell width."""
    h = grid[1] - grid[0]
    d = grid[:, None] - grid[None, :]
    return L0 / math.sqrt(2.0 * math.pi) * np.exp(-0.5 * (L0 * d) ** 2) * h


def idempotence_defect(L0: float, grid: np.ndarray, width: float = 1.0) -> float:
    """
    ‖P²f − Pf‖/‖f‖ for a Gaussian test function of the given width on a
    one-axis momentum grid. The projection factorizes over the 3n axes, and the
    defect falls as 1/L0².
    """
    grid = np.asarray(grid, dtype=float)
    if 10.0 / L0 > grid[-1] - grid[0]:
        logger.warning(f"Grid span {grid[-1] - grid[0]:.3g} is narrow for L0={L0}")
    K = projection_kernel(grid, L0)
    f = np.exp(-0.5 * (grid / width) ** 2)
    Pf = K @ f
    P2f = K @ Pf
    return float(np.linalg.norm(P2f - Pf) / np.linalg.norm(f))


# ---------------------------------------------------------------------------
# Connected contribution in the plane-wave limit
# ---------------------------------------------------------------------------

def _connected(q_out, q_in, L0: float, lam: float, units: UnitSystem):
    """C(λ, −λ) for momentum-labelled packets centred at the origin; arrays broadcast."""
    q_out = np.asarray(q_out, dtype=float)
    q_in = np.asarray(q_in, dtype=float)
    left, right = sides_from_momenta(q_out, q_in, np.zeros_like(q_out), np.zeros_like(q_in),
                                     L0, L0, 2.0 * lam, units)
    return connected_from_moments(moments_from_sides(left, right, 2.0 * lam, units))


def connected_plane_wave_limit(
    scen: PlaneWaveScenario,
    L0_sequence: Sequence[float],
    lam: float = 0.0,
) -> List[complex]:
    """c₄·C(λ,−λ) for each L0 of the sequence."""
    if scen.is_forward():
        logger.warning("Forward configuration: the forward contribution dominates, use plane_wave_overlap")
    return [complex(scen.c4 * _connected(scen.q_out, scen.q_in, L0, lam, scen.units)) for L0 in L0_sequence]


def _peak_moments(scen: PlaneWaveScenario, L0: float, lam: float = 0.0):
    left, right = sides_from_momenta(scen.q_out, scen.q_in, np.zeros_like(scen.q_out),
                                     np.zeros_like(scen.q_in), L0, L0, 2.0 * lam, scen.units)
    return moments_from_sides(left, right, 2.0 * lam, scen.units)


def _cell_grids(scen: PlaneWaveScenario, L0: float, q2_points: int, q1_points: int, width: float):
    """|q1| and q2 grids around the nominal outgoing momenta; q1 keeps its direction."""
    q1 = scen.q_out[0]
    p1 = float(np.linalg.norm(q1))
    direction = q1 / p1
    half = width / L0
    radii = p1 + half * np.linspace(-1.0, 1.0, q1_points)
    offsets = half * np.linspace(-1.0, 1.0, q2_points)
    q2_center = scen.q_in.sum(axis=0) - q1
    shape = (q1_points, q2_points, q2_points, q2_points, 3)
    Q1 = np.broadcast_to(radii[:, None, None, None, None] * direction, shape)
    cube = np.stack(np.meshgrid(offsets, offsets, offsets, indexing="ij"), axis=-1)
    Q2 = np.broadcast_to((q2_center + cube)[None], shape)
    return radii, offsets, np.stack([Q1, Q2], axis=-2)


def _integrate_cell(values: np.ndarray, radii: np.ndarray, offsets: np.ndarray) -> float:
    out = trapezoid(values, offsets, axis=-1)
    out = trapezoid(out, offsets, axis=-1)
    out = trapezoid(out, offsets, axis=-1)
    return float(trapezoid(out, radii, axis=0))


def delta_normalization(scen: PlaneWaveScenario, L0: float, params: Optional[PipelineParams] = None) -> float:
    """
    (2|q1|/ω)·∫d³q2 ∫d|q1| |C(λ,−λ)| over a cell around the nominal outgoing
    momenta. |C| tends to δ(q_dif), so the value tends to 1.
    """
    params = params or PipelineParams(q2_points=33, q1_points=41, width=8.0)
    _check_nonrelativistic(scen)
    radii, offsets, q_out = _cell_grids(scen, L0, params.q2_points, params.q1_points, params.width)
    values = np.abs(_connected(q_out, scen.q_in, L0, params.lam, scen.units))
    p1 = float(np.linalg.norm(scen.q_out[0]))
    return flux_factor(p1, scen.units) * _integrate_cell(values, radii, offsets)


# ---------------------------------------------------------------------------
# Cross section
# ---------------------------------------------------------------------------

def flux_factor(q3, units: UnitSystem) -> float:
    """u_α = 2|q3|/ω(q3) for equal masses in the centre-of-mass frame."""
    q3 = np.atleast_1d(np.asarray(q3, dtype=float))
    p = float(np.linalg.norm(q3))
    return 2.0 * p / omega_of(np.array([p, 0.0, 0.0]), units)


def box_volume(L0: float) -> float:
    """V = L0³(π/2)^{3/2}."""
    return L0 ** 3 * (math.pi / 2.0) ** 1.5


def box_duration(v_a_sq: float) -> float:
    """T = √(π/(2v̂(a²)))."""
    return math.sqrt(math.pi / (2.0 * v_a_sq))


def differential_cross_section(scen: PlaneWaveScenario, exact_jacobian: bool = False) -> float:
    """
    (c₄²/8π)(λ_c/2)²(π/2)³ for nonrelativistic equal-mass elastic scattering.

    With exact_jacobian the energy δ-function is integrated over |q1| with
    d(ω1+ω2)/d|q1| = 2|q1|/ω, which gives one quarter of the displayed constant.
    """
    _check_nonrelativistic(scen)
    if scen.is_forward():
        logger.warning("Forward configuration: the cross section describes non-forward scattering")
    lc = scen.units.compton_length
    value = scen.c4 ** 2 / (8.0 * math.pi) * (0.5 * lc) ** 2 * (math.pi / 2.0) ** 3
    return value / 4.0 if exact_jacobian else value


def energy_shell_integral(p: float, units: UnitSystem, rel_width: float = 1e-4) -> float:
    """
    J = ∫d|q1| |q1|² δ(2ω(|q1|) − 2ω(p)) by quadrature.

    The δ-function is a normalized Gaussian in energy whose width corresponds
    to rel_width·p in |q1|; J → pω(p)/2 as rel_width → 0.
    """
    if p <= 0:
        raise ValueError(f"energy shell needs p > 0, got {p}")

    def omega(k):
        return omega_of(np.array([k, 0.0, 0.0]), units)

    w_p = omega(p)
    sigma_k = rel_width * p
    sigma_e = sigma_k * 2.0 * p / w_p

    def integrand(k):
        x = (2.0 * omega(k) - 2.0 * w_p) / sigma_e
        return k * k * math.exp(-0.5 * x * x) / (math.sqrt(2.0 * math.pi) * sigma_e)

    value, err = quad(integrand, p - 12.0 * sigma_k, p + 12.0 * sigma_k, points=[p],
                      epsabs=0.0, epsrel=1e-10, limit=200)
    logger.debug(f"Energy shell p={p:.3e}: J={value:.12e} ± {err:.1e}")
    return value


def shell_cross_section(scen: PlaneWaveScenario, rel_width: float = 1e-4) -> float:
    """
    (c₄²/2π)(λ_c/2)⁴(π/2)³ · J/u_α with the energy shell J integrated numerically.

    This is the plane-wave limit of the pipeline with no Jacobian taken in
    closed form; it equals differential_cross_section(exact_jacobian=True)
    times (λ_c ω)², which is 1 only at rest.
    """
    _check_nonrelativistic(scen)
    lc = scen.units.compton_length
    p = float(np.linalg.norm(scen.q_in[0]))
    J = energy_shell_integral(p, scen.units, rel_width)
    prefactor = scen.c4 ** 2 / (2.0 * math.pi) * (0.5 * lc) ** 4 * (math.pi / 2.0) ** 3
    return prefactor * J / flux_factor(scen.q_in[0], scen.units)


def scattering_angle(scen: PlaneWaveScenario) -> float:
    a, b = scen.q_in[0], scen.q_out[0]
    c = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    return math.acos(max(-1.0, min(1.0, c)))


def numeric_cross_section(scen: PlaneWaveScenario, L0: float, params: Optional[PipelineParams] = None) -> Dict:
    """
    Finite-L0 pipeline

        (λ_c/2)² ∫d³q2 ∫d|q1| |q1|² (V/(u_α T)) |c₄C(λ,−λ)|²/‖s‖²

    with the box volume V(L0), duration T(v̂(a²)) at the nominal momenta and
    ‖s‖² = F + c₄C of the incoming state.
    """
    params = params or PipelineParams()
    _check_nonrelativistic(scen)
    units = scen.units
    lc = units.compton_length
    radii, offsets, q_out = _cell_grids(scen, L0, params.q2_points, params.q1_points, params.width)
    C = _connected(q_out, scen.q_in, L0, params.lam, units)
    integrand = radii[:, None, None, None] ** 2 * np.abs(scen.c4 * C) ** 2
    cell = _integrate_cell(integrand, radii, offsets)

    F_in = plane_wave_overlap(scen.q_in, scen.q_in, L0, units).real
    C_in = complex(_connected(scen.q_in, scen.q_in, L0, 0.0, units)).real
    norm_sq = F_in + scen.c4 * C_in
    v_a = float(_peak_moments(scen, L0, params.lam).v_a_sq)
    u = flux_factor(scen.q_in[0], units)

    value = (0.5 * lc) ** 2 * box_volume(L0) / (u * box_duration(v_a)) * cell / norm_sq
    closed = differential_cross_section(scen)
    exact = differential_cross_section(scen, exact_jacobian=True)
    shell = shell_cross_section(scen)
    logger.debug(f"Cross-section pipeline L0={L0:.3e}: {value:.6e} (exact-Jacobian constant {exact:.6e})")
    return {
        "L0": L0,
        "value": value,
        "closed_form": closed,
        "closed_form_exact_jacobian": exact,
        "shell": shell,
        "ratio_to_exact_jacobian": value / exact if exact else math.nan,
        "ratio_to_closed_form": value / closed if closed else math.nan,
        "closed_form_to_shell": closed / shell,
        "forward_norm_constant": forward_norm_constant(scen.n, L0, units),
        "norm_sq": norm_sq,
    }


def forward_dominance_exponent(scen: PlaneWaveScenario, L0_pair: Tuple[float, float]) -> float:
    """Slope of ln(F(λ,λ)/C(λ,λ)) against ln L0 for the incoming state; 3n − 4 in the limit."""
    ratios = []
    for L0 in L0_pair:
        F = plane_wave_overlap(scen.q_in, scen.q_in, L0, scen.units).real
        C = complex(_connected(scen.q_in, scen.q_in, L0, 0.0, scen.units)).real
        ratios.append(math.log(F / C))
    return (ratios[1] - ratios[0]) / math.log(L0_pair[1] / L0_pair[0])
