"""
Brute-force quadrature oracles for the closed forms.

Gauss–Hermite tensor rules are applied in whitened coordinates: for an
integrand exp(logf(w)) whose modulus is close to a Gaussian with precision
M and centre w*, write M = R Rᵀ and w = w* + R^{-T} z, so that

    ∫ exp(logf(w)) dw = (2π)^{d/2}/det R · Σ_i W_i exp(logf(w_i) + |z_i|²/2)

with (z_i, W_i) the standard-normal product rule. Separable integrals use
scipy's adaptive quad per axis instead.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.integrate import quad

from src.errors import ToleranceError
from src.packets import MinimumPacket, packet_fourier, packet_position
from src.scalar_products import PacketSide, moments_from_sides, connected_from_moments


@dataclass(frozen=True)
class WhitenedNodes:
    """
    Product Gauss–Hermite nodes for the Gaussian weight exp(−(w−w*)ᵀM(w−w*)/2).

    Node i sits at w_i = w* + R^{-T} z_i with M = R Rᵀ and z_i drawn from the
    `order`-point standard-normal rule on every axis.
    """
    centre: np.ndarray
    R_inv_T: np.ndarray
    log_volume: float        # log((2π)^{d/2}/det R)
    z1: np.ndarray           # 1-d standard-normal nodes
    w1: np.ndarray           # their weights, Σ = 1

    @classmethod
    def build(cls, precision, centre, order: int) -> "WhitenedNodes":
        if order < 2:
            raise ValueError(f"Gauss–Hermite order must be >= 2, got {order}")
        precision = np.asarray(precision, dtype=float)
        centre = np.asarray(centre, dtype=float)
        if precision.shape != (centre.size, centre.size):
            raise ValueError(f"precision {precision.shape} does not match centre of size {centre.size}")
        R = np.linalg.cholesky(precision)
        x, w = hermgauss(order)
        d = centre.size
        return cls(
            centre=centre,
            R_inv_T=np.linalg.inv(R).T,
            log_volume=0.5 * d * math.log(2.0 * math.pi) - float(np.sum(np.log(np.diag(R)))),
            z1=math.sqrt(2.0) * x,
            w1=w / math.sqrt(math.pi),
        )

    @property
    def dim(self) -> int:
        return self.centre.size

    def blocks(self, chunk: int = 200000) -> Iterator[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """(w points, whitened z, product weights) in batches of at most `chunk` nodes."""
        grid = itertools.product(range(self.z1.size), repeat=self.dim)
        while True:
            index = np.array(list(itertools.islice(grid, chunk)), dtype=int)
            if index.size == 0:
                return
            z = self.z1[index]
            yield self.centre[None, :] + z @ self.R_inv_T.T, z, np.prod(self.w1[index], axis=1)


@dataclass
class OracleGrid:
    p_order: int = 40        # nodes per axis for 3-d momentum integrals
    u_order: int = 24        # nodes per axis for the 4-d u integral
    adaptive_rel: float = 1e-12
    chunk: int = 200000      # evaluation points per batch


def whitened_gauss_hermite(
    logf: Callable[[np.ndarray], np.ndarray],
    precision: np.ndarray,
    centre: np.ndarray,
    order: int,
    chunk: int = 200000,
) -> complex:
    """∫_{R^d} exp(logf(w)) dw; logf maps (m, d) points to (m,) complex values."""
    nodes = WhitenedNodes.build(precision, centre, order)
    total = 0.0 + 0.0j
    for points, z, weights in nodes.blocks(chunk):
        total += np.sum(weights * np.exp(logf(points) + 0.5 * np.sum(z * z, axis=1)))
    return complex(math.exp(nodes.log_volume) * total)


def _quad_complex(f: Callable[[float], complex], lo: float, hi: float, rel: float) -> complex:
    opts = dict(epsabs=0.0, epsrel=rel, limit=400)
    re, err_re = quad(lambda s: f(s).real, lo, hi, **opts)
    im, err_im = quad(lambda s: f(s).imag, lo, hi, **opts)
    scale = max(abs(re), abs(im), 1e-300)
    if max(err_re, err_im) > 1e3 * rel * scale:
        raise ToleranceError(f"Adaptive quadrature error {max(err_re, err_im):.3e} exceeds tolerance")
    return complex(re, im)


# ---------------------------------------------------------------------------
# Packet oracles
# ---------------------------------------------------------------------------

def packet_moments_oracle(pkt: MinimumPacket, grid: Optional[OracleGrid] = None) -> Dict:
    """Means and per-axis variances of |φ(x)|² and |φ̃(p)|² by adaptive quadrature along axes."""
    grid = grid or OracleGrid()
    mom = {"mean_x": np.zeros(3), "mean_p": np.zeros(3), "var_x": np.zeros(3), "var_p": np.zeros(3)}
    lc = pkt.units.compton_length
    sx = math.sqrt(pkt.L0 ** 2 + lc ** 2 * pkt.lam ** 2 / (4.0 * pkt.L0 ** 2))
    sp = 1.0 / (2.0 * pkt.L0)
    opts = dict(epsabs=0.0, epsrel=grid.adaptive_rel, limit=400)

    for axis in range(3):
        for kind, centre, sigma, func in (
            ("x", pkt.xi, sx, packet_position),
            ("p", pkt.q, sp, packet_fourier),
        ):
            def density(s, axis=axis, centre=centre, func=func):
                point = centre.copy()
                point[axis] = s
                return abs(func(point, pkt)) ** 2

            lo, hi = centre[axis] - 14.0 * sigma, centre[axis] + 14.0 * sigma
            norm, _ = quad(density, lo, hi, points=[centre[axis]], **opts)
            first, _ = quad(lambda s: s * density(s), lo, hi, points=[centre[axis]], **opts)
            mean = first / norm
            second, _ = quad(lambda s: (s - mean) ** 2 * density(s), lo, hi, points=[centre[axis]], **opts)
            mom[f"mean_{kind}"][axis] = mean
            mom[f"var_{kind}"][axis] = second / norm
    return mom


def inverse_fourier_oracle(x, pkt: MinimumPacket, grid: Optional[OracleGrid] = None) -> complex:
    """(2π)^{-3/2} ∫dp e^{-ip·x} φ̃(p), one adaptive quadrature per axis."""
    grid = grid or OracleGrid()
    x = np.asarray(x, dtype=float)
    half = 14.0 / (2.0 * pkt.L0)
    value = (2.0 * math.pi) ** -1.5 * pkt.L0 ** 3 / math.pi ** 1.5
    for axis in range(3):
        q, xi, xa = pkt.q[axis], pkt.xi[axis], x[axis]

        def f(p):
            d = p - q
            return np.exp(-1j * p * xa - pkt.ell0_sq * d * d + 1j * d * xi)

        value *= _quad_complex(f, q - half, q + half, grid.adaptive_rel)
    return complex(value)


def fourier_norm_oracle(pkt: MinimumPacket, grid: Optional[OracleGrid] = None) -> float:
    """∫|φ̃(p)|² d³p by Gauss–Hermite in whitened momentum coordinates."""
    grid = grid or OracleGrid()
    prec = 4.0 * pkt.L0 ** 2 * np.eye(3)

    def logf(p):
        return np.log(np.abs(packet_fourier(p, pkt)) ** 2)

    return whitened_gauss_hermite(logf, prec, pkt.q, grid.p_order, grid.chunk).real


# ---------------------------------------------------------------------------
# Forward (pair overlap) oracle
# ---------------------------------------------------------------------------

def pair_overlap_oracle(q_k, h_k, L_k: float, q_j, h_j, L_j: float, grid: Optional[OracleGrid] = None) -> complex:
    """The single-pair momentum integral of the forward contribution, axis by axis."""
    grid = grid or OracleGrid()
    q_k, h_k, q_j, h_j = (np.asarray(v, dtype=float) for v in (q_k, h_k, q_j, h_j))
    A = L_k ** 2 + L_j ** 2
    centre = (L_k ** 2 * q_k + L_j ** 2 * q_j) / A
    half = 14.0 / math.sqrt(2.0 * A)
    value = L_k ** 3 * L_j ** 3
    for axis in range(3):
        def f(p, axis=axis):
            dk = p - q_k[axis]
            dj = p - q_j[axis]
            return np.exp(-L_k ** 2 * dk * dk - 1j * dk * h_k[axis] - L_j ** 2 * dj * dj + 1j * dj * h_j[axis])

        value *= _quad_complex(f, centre[axis] - half, centre[axis] + half, grid.adaptive_rel)
    return complex(value)


# ---------------------------------------------------------------------------
# Layered connected-contribution oracle
# ---------------------------------------------------------------------------

def _stack_sides(left: PacketSide, right: PacketSide):
    a = np.concatenate([left.a, right.a], axis=0)
    b = np.concatenate([left.b, right.b], axis=0)
    L = np.array([left.L] * len(left.a) + [right.L] * len(right.a))
    s = np.array([left.sign] * len(left.a) + [right.sign] * len(right.a))
    return a, b, L, s


def momentum_reduction_check(
    left: PacketSide,
    right: PacketSide,
    u_samples: Sequence[np.ndarray],
    grid: Optional[OracleGrid] = None,
) -> float:
    """
    Largest relative error, over sample u = (u0, u) and packets k, between
    ∫dp (L_k³/π^{3/2}) e^{−L_k²p² + i s_k p·β_k} by 3-d quadrature and its
    closed form e^{−|β_k|²/4L_k²}, with β_k = a_k u0 − u + b_k.
    """
    grid = grid or OracleGrid()
    a, b, L, s = _stack_sides(left, right)
    worst = 0.0
    for w in u_samples:
        u0, u = float(w[0]), np.asarray(w[1:], dtype=float)
        for k in range(len(a)):
            beta = a[k] * u0 - u + b[k]
            Lk, sk = float(L[k]), float(s[k])

            def logf(p, beta=beta, Lk=Lk, sk=sk):
                return (3.0 * math.log(Lk) - 1.5 * math.log(math.pi)
                        - Lk ** 2 * np.sum(p * p, axis=1) + 1j * sk * (p @ beta))

            numeric = whitened_gauss_hermite(logf, 2.0 * Lk ** 2 * np.eye(3), np.zeros(3),
                                             grid.p_order, grid.chunk)
            exact = math.exp(-(beta @ beta) / (4.0 * Lk ** 2))
            worst = max(worst, abs(numeric - exact) / exact)
    return worst


def u_integral_form(left: PacketSide, right: PacketSide):
    """
    Quadratic form of the p-reduced integrand in w = (u0, u):
    Σ_k |G_k w + b_k|²/4L_k² = wᵀHw + 2cᵀw + d with G_k = [a_k | −I₃].
    """
    a, b, L, _ = _stack_sides(left, right)
    H = np.zeros((4, 4))
    c = np.zeros(4)
    d = 0.0
    for k in range(len(a)):
        G = np.hstack([a[k][:, None], -np.eye(3)])
        wk = 1.0 / (4.0 * L[k] ** 2)
        H += wk * G.T @ G
        c += wk * G.T @ b[k]
        d += wk * float(b[k] @ b[k])
    return H, c, d


def reduced_integrand_samples(left: PacketSide, right: PacketSide, count: int, seed: int = 0):
    """Sample points u drawn from the bulk of the reduced integrand."""
    H, c, _ = u_integral_form(left, right)
    centre = -np.linalg.solve(H, c)
    cov = np.linalg.inv(2.0 * H)
    rng = np.random.default_rng(seed)
    return list(rng.multivariate_normal(centre, cov, size=count))


def connected_oracle(
    left: PacketSide,
    right: PacketSide,
    delta: float,
    units,
    grid: Optional[OracleGrid] = None,
) -> complex:
    """
    C from the 4-d u integral of the p-reduced integrand

        e^{iφ_T}/(2π)⁴ ∫d⁴u exp(iδT u0 − iδq·u − Σ_k |a_k u0 − u + b_k|²/4L_k²)
    """
    grid = grid or OracleGrid()
    m = moments_from_sides(left, right, delta, units)
    H, c, d = u_integral_form(left, right)
    centre = -np.linalg.solve(H, c)
    dT = float(m.delta_T)
    dq = np.asarray(m.delta_q, dtype=float)

    def logf(w):
        quad_form = np.einsum("mi,ij,mj->m", w, H, w) + 2.0 * (w @ c) + d
        return 1j * dT * w[:, 0] - 1j * (w[:, 1:] @ dq) - quad_form

    J = whitened_gauss_hermite(logf, 2.0 * H, centre, grid.u_order, grid.chunk)
    return complex(np.exp(1j * float(m.phi_T)) / (2.0 * math.pi) ** 4 * J)


def connected_layered_check(
    left: PacketSide,
    right: PacketSide,
    delta: float,
    units,
    samples: int = 10,
    grid: Optional[OracleGrid] = None,
) -> Dict:
    """Both layers of the connected-contribution oracle with relative errors."""
    u_pts = reduced_integrand_samples(left, right, samples)
    reduction_error = momentum_reduction_check(left, right, u_pts, grid)
    closed = complex(connected_from_moments(moments_from_sides(left, right, delta, units)))
    numeric = connected_oracle(left, right, delta, units, grid)
    return {
        "p_reduction_max_rel_error": reduction_error,
        "closed_form": closed,
        "quadrature": numeric,
        "rel_error": abs(numeric - closed) / abs(closed),
    }
