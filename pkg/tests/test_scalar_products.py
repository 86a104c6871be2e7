"""Tests for hatted moments, the forward and connected contributions."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core_model import UnitSystem, free_trajectories
from src.errors import DegenerateMomentsError
from src.oracles import pair_overlap_oracle
from src.scalar_products import (
    circular_connected,
    circular_forward_terms,
    connected_contribution,
    connected_general,
    forward_contribution,
    forward_norm_constant,
    forward_pairing_terms,
    hatted_moments,
    interaction_units,
    moments_from_sides,
    pair_overlap,
    scalar_product,
    sides_from_momenta,
    state_norm_sq,
    trans_inv_sides,
)


@settings(max_examples=40, derandomize=True, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_translation_invariant_identity(seed):
    rng = np.random.default_rng(seed)
    traj = free_trajectories(rng.uniform(-1.0, 1.0, (3, 3)), rng.uniform(-0.1, 0.1, (3, 3)),
                             UnitSystem.natural())
    tau, lam = sorted(rng.uniform(0.0, 5.0, 2))
    L_lam, L_tau = rng.uniform(0.5, 2.0, 2)
    lhs, rhs = trans_inv_sides(traj, lam, tau, L_lam, L_tau)
    m = hatted_moments(traj, lam, tau, L_lam, L_tau)
    assert abs(lhs - rhs) <= 1e-12 * float(m.a_sq * m.b_sq)


def test_hatted_moments_swap_order(circular_orbit):
    forward = hatted_moments(circular_orbit, 3.0, 1.0, 2.0, 2.5)
    backward = hatted_moments(circular_orbit, 1.0, 3.0, 2.5, 2.0)
    assert float(forward.a_sq) == pytest.approx(float(backward.a_sq))
    assert float(forward.b_sq) == pytest.approx(float(backward.b_sq))


def test_delta_t_is_tau_minus_lambda_energy(natural_units):
    q_lam = np.array([[0.04, 0.0, 0.0], [-0.04, 0.0, 0.0]])
    q_tau = np.array([[0.01, 0.02, 0.0], [-0.01, -0.02, 0.0]])
    zero = np.zeros((2, 3))
    left, right = sides_from_momenta(q_lam, q_tau, zero, zero, 2.0, 2.0, 1.0, natural_units)
    moments = moments_from_sides(left, right, 1.0, natural_units)
    T_lam = 0.5 * float(np.sum(q_lam ** 2))
    T_tau = 0.5 * float(np.sum(q_tau ** 2))
    assert float(moments.delta_T) == pytest.approx(T_tau - T_lam)
    assert float(moments.delta_T) < 0.0


def test_pair_overlap_matches_quadrature():
    args = ([0.3, -0.2, 0.5], [0.4, 0.1, -0.7], 1.3, [-0.1, 0.6, 0.2], [-0.5, 0.2, 0.3], 1.7)
    closed = pair_overlap(*args)
    numeric = pair_overlap_oracle(*args)
    assert abs(numeric - closed) <= 1e-8 * abs(closed)


def test_pair_overlap_swap_is_conjugate():
    q_k, h_k, q_j, h_j = [0.3, -0.2, 0.5], [0.4, 0.1, -0.7], [-0.1, 0.6, 0.2], [-0.5, 0.2, 0.3]
    kj = pair_overlap(q_k, h_k, 1.3, q_j, h_j, 1.7)
    jk = pair_overlap(q_j, h_j, 1.7, q_k, h_k, 1.3)
    assert jk == pytest.approx(kj.conjugate(), rel=1e-12)


def test_forward_norm_is_forward_constant(circular_orbit, natural_units):
    # exchange pairing is suppressed by e^{-12.5} at r = 20, L0 = 2
    F = forward_contribution(circular_orbit, 1.0, 1.0, 2.0, 2.0)
    k_F = forward_norm_constant(2, 2.0, natural_units)
    assert F.real == pytest.approx(k_F, rel=1e-5)
    assert abs(F.imag) < 1e-12 * k_F
    assert state_norm_sq(circular_orbit, 1.0, 2.0) == pytest.approx(F.real)


def test_forward_constant_value(natural_units):
    assert forward_norm_constant(2, 1.0, natural_units) == pytest.approx(4.0 / (2.0 * math.pi) ** 3)


@pytest.mark.parametrize("theta", [0.2, 0.7, 1.5])
def test_circular_pairings_match_closed_form(circular_orbit, natural_units, theta):
    omega = math.sqrt(2.0 * 0.5 / 20.0 ** 3)
    perms, terms = forward_pairing_terms(circular_orbit, theta / omega, 0.0, 2.0, 2.0)
    direct, exchange = circular_forward_terms(20.0, 0.5, 2.0, theta, natural_units)
    assert perms[0] == (0, 1)
    assert abs(terms[0]) == pytest.approx(direct, rel=1e-8)
    assert abs(terms[1]) == pytest.approx(exchange, rel=1e-8)


@pytest.mark.parametrize("lam", [0.5, 3.0, 20.0])
def test_circular_connected_matches_general(circular_orbit, natural_units, lam):
    C = connected_contribution(circular_orbit, lam, 0.0, 2.0, 2.0)
    assert C == pytest.approx(circular_connected(20.0, 0.5, 2.0, lam, natural_units), rel=1e-9)
    assert connected_general(circular_orbit, lam, 0.0, 2.0, 2.0) == pytest.approx(C, rel=1e-9)


def test_connected_reverse_order_is_conjugate(circular_orbit):
    C = connected_contribution(circular_orbit, 4.0, 1.0, 2.0, 2.5)
    assert connected_contribution(circular_orbit, 1.0, 4.0, 2.5, 2.0) == pytest.approx(C.conjugate())


def test_connected_needs_kinetic_energy(natural_units):
    traj = free_trajectories([[1.0, 0, 0], [-1.0, 0, 0]], [[0, 0, 0], [0, 0, 0]], natural_units)
    with pytest.raises(DegenerateMomentsError):
        connected_contribution(traj, 1.0, 0.0, 1.0, 1.0)


def test_particle_count_must_match(circular_orbit):
    with pytest.raises(ValueError):
        forward_contribution(circular_orbit, 1.0, 0.0, 2.0, 2.0, n=3)


def test_interaction_units(natural_units):
    assert interaction_units(2, natural_units) == "lambda_c^0"
    assert interaction_units(3, natural_units) == "lambda_c^2"


def test_scalar_product_flags_nrcp(circular_orbit):
    parts = scalar_product(circular_orbit, 2.0, 0.0, 2.0, 2.0, c2n=0.0)
    assert "nrcp_lambda" in parts.flags
    assert parts.total == parts.forward
