"""Tests for minimum-uncertainty packets, NRCP bounds and the short-time translation."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from src.core_model import circular_two_body, free_trajectories
from src.errors import ResolutionError
from src.oracles import inverse_fourier_oracle, packet_moments_oracle
from src.packets import (
    MinimumPacket,
    NrcpParams,
    SpatialGrid,
    check_nrcp,
    delta_sequence,
    delta_sequence_error,
    gaussian_sum_closed_form,
    gaussian_sum_quadrature,
    lemma1_shorttime_check,
    nonrel_duration_bound,
    omega_of,
    packet_moments,
    packet_position,
    taylor_bound_check,
)


@pytest.fixture
def spread_packet(natural_units):
    """Packet at λ = 0.5 with a complex ℓ₀²."""
    return MinimumPacket(xi=[0.3, -0.2, 0.1], q=[0.4, 0.0, -0.1], L0=1.2, lam=0.5, units=natural_units)


def test_packet_rejects_nonpositive_width(natural_units):
    with pytest.raises(ValueError):
        MinimumPacket(xi=[0, 0, 0], q=[0, 0, 0], L0=0.0, lam=0.0, units=natural_units)


def test_heisenberg_product_is_minimal_at_zero(natural_units):
    pkt = MinimumPacket(xi=[0, 0, 0], q=[0.1, 0, 0], L0=2.0, lam=0.0, units=natural_units)
    assert packet_moments(pkt)["heisenberg_product"] == pytest.approx(0.5, abs=1e-15)


def test_heisenberg_product_grows_with_lambda(spread_packet):
    mom = packet_moments(spread_packet)
    assert mom["heisenberg_product"] > 0.5
    assert mom["heisenberg_product"] == pytest.approx(math.sqrt(mom["var_x"] * mom["var_p"]), rel=1e-12)


def test_packet_moments_match_quadrature(spread_packet):
    closed = packet_moments(spread_packet)
    oracle = packet_moments_oracle(spread_packet)
    np.testing.assert_allclose(oracle["mean_x"], closed["mean_x"], atol=1e-8)
    np.testing.assert_allclose(oracle["mean_p"], closed["mean_p"], atol=1e-8)
    np.testing.assert_allclose(oracle["var_x"], closed["var_x"], rtol=1e-8)
    np.testing.assert_allclose(oracle["var_p"], closed["var_p"], rtol=1e-8)


def test_position_form_matches_inverse_fourier(spread_packet):
    x = np.array([0.2, 0.1, -0.3])
    closed = packet_position(x, spread_packet)
    oracle = inverse_fourier_oracle(x, spread_packet)
    assert abs(closed - oracle) <= 1e-8 * abs(closed)


@settings(max_examples=30, derandomize=True, deadline=None)
@given(
    a_re=st.floats(0.5, 2.0),
    a_im_frac=st.floats(-1.0, 1.0),
    b_re=st.floats(-2.0, 2.0),
    b_im=st.floats(-2.0, 2.0),
)
def test_gaussian_sum_closed_form(a_re, a_im_frac, b_re, b_im):
    alpha = complex(a_re, a_im_frac * a_re)
    beta = complex(b_re, b_im)
    closed = gaussian_sum_closed_form(alpha, beta)
    numeric = gaussian_sum_quadrature(alpha, beta)
    assert abs(numeric - closed) <= 1e-10 * abs(closed)


def test_gaussian_sum_requires_positive_real_part():
    with pytest.raises(ValueError):
        gaussian_sum_closed_form(complex(0.0, 1.0), 0.0)


def test_omega_of(natural_units):
    assert omega_of([3.0, 4.0, 0.0], natural_units) == pytest.approx(math.sqrt(26.0))


def test_taylor_remainder_is_half_the_bound(natural_units):
    # remainder ≈ λ_c³(p² − q²)²/8 for small momenta
    lhs, rhs = taylor_bound_check([0.01, 0.0, 0.0], [0.02, 0.01, 0.0], natural_units)
    assert lhs <= rhs
    assert lhs == pytest.approx(rhs / 2.0, rel=1e-2)


def test_delta_sequence_has_unit_mass():
    s = np.linspace(-1.0, 1.0, 20001)
    assert trapezoid(delta_sequence(s, 50.0), s) == pytest.approx(1.0, rel=1e-9)


def test_delta_sequence_error_for_cosine():
    L0 = 100.0
    assert delta_sequence_error(math.cos, L0) == pytest.approx(math.expm1(-1.0 / (4.0 * L0 ** 2)), rel=1e-6)


def test_nrcp_fails_for_fast_close_pair(circular_orbit):
    report = check_nrcp(circular_orbit, L0=2.0, lam=0.0)
    assert not report.passed
    assert not report.velocity_ok
    assert not report.compton_ok


def test_nrcp_passes_for_slow_wide_pair(natural_units):
    traj = circular_two_body(1000.0, 1.0, natural_units)
    report = check_nrcp(traj, L0=20.0, lam=0.0)
    assert report.passed
    velocity, compton, spread = report.margins
    assert velocity == pytest.approx(2.0 * math.sqrt(1.0 / 2000.0))
    assert compton == pytest.approx(0.05)
    assert spread == pytest.approx(400.0 / 1000.0 ** 2)


def test_nrcp_margin_override(natural_units):
    traj = circular_two_body(1000.0, 1.0, natural_units)
    assert not check_nrcp(traj, L0=20.0, lam=0.0, margin=100.0).passed
    assert check_nrcp(traj, L0=20.0, lam=0.0, params=NrcpParams(margin=10.0)).passed


def test_single_particle_has_no_spread_bound(natural_units):
    traj = free_trajectories([[0.0, 0.0, 0.0]], [[0.0, 0.0, 0.0]], natural_units)
    report = check_nrcp(traj, L0=20.0, lam=0.0)
    assert report.spread_ok is None
    assert report.passed


def test_nonrel_duration_bound_at_rest(natural_units):
    traj = free_trajectories([[1.0, 0, 0], [-1.0, 0, 0]], [[0, 0, 0], [0, 0, 0]], natural_units)
    assert nonrel_duration_bound(traj, L0=10.0) == pytest.approx(2.0 * math.pi * 1e4)


def test_free_translation_is_exact(natural_units):
    traj = free_trajectories([[2.0, 0, 0], [-2.0, 0, 0]], [[0.01, 0.02, 0], [-0.01, -0.02, 0]], natural_units)
    assert lemma1_shorttime_check(traj, L0=2.0, lam_small=3.0) < 1e-10


def test_translation_at_zero_lambda_vanishes(circular_orbit):
    assert lemma1_shorttime_check(circular_orbit, L0=2.0, lam_small=0.0) == 0.0


def test_translation_rejects_coarse_grid(circular_orbit):
    with pytest.raises(ResolutionError):
        lemma1_shorttime_check(circular_orbit, L0=2.0, lam_small=0.5, grid=SpatialGrid(points=16))
