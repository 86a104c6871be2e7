"""Tests for the L0(T, V) model along an escape trajectory."""
import math

import numpy as np
import pytest

from src.core_model import (
    PairPotential,
    UnitSystem,
    classical_quantities,
    free_trajectories,
    integrate_newton,
)
from src.errors import DomainError
from src.l0_model import (
    L0Dynamics,
    amplitude_along,
    amplitude_rate,
    euler_lagrange_residual,
    exponential_profile,
    integrate_l0,
    l0_solution,
    l0_solution_from_initial,
    lemma4_stationarity_check,
    log_transition_amplitude_wave,
    partial_derivative_check,
    transition_amplitude_from_products,
    transition_amplitude_wave,
    validity_domain,
    wave_amplitude_constant,
)


@pytest.fixture
def dynamics(natural_units):
    """T0 = 5e-3, T_inf = e_C = 1e-3, L0(T0) = 1e4."""
    return L0Dynamics.from_initial(5e-3, 1e-3, 1e-3, 1e4, natural_units)


def test_validity_domain_reference_numbers():
    units = UnitSystem.from_mass(1e-8)
    lc = units.compton_length
    assert float(f"{validity_domain(4e-6, 1e4 * lc, units).rho_max:.2g}") == 0.073
    assert float(f"{validity_domain(4e-6, 1e2 * lc, units).rho_max:.2g}") == 51.0


def test_validity_domain_flags(natural_units):
    report = validity_domain(1e-4, 100.0, natural_units, rho=1.0)
    assert report.valid is False
    assert report.reasons
    assert validity_domain(1e-4, 100.0, natural_units, rho=5.0).valid
    assert validity_domain(1e-4, 5.0, natural_units).reasons
    with pytest.raises(ValueError):
        validity_domain(0.0, 100.0, natural_units)


def test_initial_condition_is_reproduced(dynamics):
    assert l0_solution(5e-3, 1e-3 - 5e-3, dynamics) == pytest.approx(1e4, rel=1e-12)


def test_eliminated_form_matches_closed_form(dynamics):
    T = 2e-3
    direct = l0_solution(T, 1e-3 - T, dynamics)
    assert l0_solution_from_initial(T, 1e4, 5e-3, dynamics) == pytest.approx(direct, rel=1e-10)


def test_l0_grows_towards_divergence(dynamics):
    values = [l0_solution(T, 1e-3 - T, dynamics) for T in (4e-3, 2e-3, 1.1e-3)]
    assert values[0] < values[1] < values[2]


def test_kinetic_energy_must_exceed_asymptote(dynamics, natural_units):
    with pytest.raises(DomainError):
        l0_solution(1e-3, 0.0, dynamics)
    with pytest.raises(DomainError):
        L0Dynamics.from_initial(1e-3, 1e-3, 1e-3, 1e4, natural_units)
    with pytest.raises(DomainError):
        log_transition_amplitude_wave(0.0, 1e-3, 1e4, 2, 1.0, natural_units)


def test_ode_matches_closed_form(dynamics):
    res = integrate_l0(dynamics, 5e-3, 1.5e-3)
    assert res["max_rel_error"] < 1e-4
    assert res["L0_ode"][0] == pytest.approx(1e4)


def test_partial_derivatives_coincide(natural_units):
    dyn = L0Dynamics.from_initial(5e-3, 1e-3, 1e-3, 2.5e4, natural_units,
                                  g_profile=exponential_profile(1e3, 1e-3))
    res = partial_derivative_check(3e-3, 1e-3 - 3e-3, dyn)
    assert res["rel_diff"] < 1e-6


def test_wave_amplitude_constant(natural_units):
    assert wave_amplitude_constant(2, natural_units) == pytest.approx(math.sqrt(2.0) / math.pi)


def test_wave_amplitude_log_form(natural_units):
    value = transition_amplitude_wave(2e-3, 1e-3, 50.0, 2, 4.0, natural_units)
    expected = (2.0 * wave_amplitude_constant(2, natural_units) * 50.0 ** 2 / 2e-3 ** 0.25
                * math.exp(-0.5 * 50.0 ** 2 * 1e-3 ** 2 / 2e-3))
    assert value == pytest.approx(expected, rel=1e-12)


def test_escape_energies(escape):
    traj, dyn = escape
    cq = classical_quantities(traj, 0.0)
    assert cq.T == pytest.approx(6e-4, rel=1e-12)
    assert cq.V == pytest.approx(-5e-4, rel=1e-12)
    assert dyn.e_C == pytest.approx(cq.T + cq.V, rel=1e-9)


def test_amplitude_along_escape(escape):
    traj, dyn = escape
    start = amplitude_along(traj, dyn, 0.0)
    assert start["L0"] == pytest.approx(100.0, rel=1e-10)
    assert 0.0 < start["I"]


def test_amplitude_is_stationary_along_trajectory(escape):
    traj, dyn = escape
    assert abs(amplitude_rate(traj, dyn, 5e3)) < 1e-4


def test_products_reproduce_wave_amplitude(escape, natural_units):
    traj, _ = escape
    lam = 1e3
    T_tau = 0.5 * float(np.sum(traj.velocities(0.0) ** 2))
    T_lam = 0.5 * float(np.sum(traj.velocities(lam) ** 2))
    for ratio in (1e2, 1e4):
        prod = transition_amplitude_from_products(traj, lam, 0.0, ratio * lam, 100.0, 1.0)
        wave = transition_amplitude_wave(T_tau, T_lam, 100.0, 2, 1.0, natural_units)
        assert prod / wave * 4.0 ** 0.75 == pytest.approx(1.0, rel=1e-2)


def test_euler_lagrange_residual_detects_wrong_force(escape, natural_units):
    traj, dyn = escape
    assert euler_lagrange_residual(traj, dyn, 5e3) < 1e-3
    wrong = integrate_newton(traj.positions(0.0), traj.velocities(0.0), PairPotential.inverse_r(10.0),
                             (0.0, 1e4), tol=1e-12, units=natural_units)
    assert euler_lagrange_residual(wrong, dyn, 5e3, potential=traj.potential) > 0.1


@pytest.fixture(scope="module")
def escape_stationarity(escape):
    traj, dyn = escape
    return lemma4_stationarity_check(traj, dyn, 1.0, 0.0, 1e4, control_scale=2.0)


def test_first_variation_matches_euler_lagrange(escape_stationarity):
    report = escape_stationarity
    assert not report.skipped
    for measured, predicted in zip(report.first_order, report.first_order_predicted):
        assert abs(measured - predicted) < 1e-4 * report.first_order_scale
    control = report.control
    for measured, predicted in zip(control.first_order, control.first_order_predicted):
        assert abs(measured - predicted) < 1e-4 * control.first_order_scale


def test_escape_orbit_is_not_stationary(escape_stationarity):
    report = escape_stationarity
    assert report.stationary is False
    assert report.first_order_rel > 1e-3
    # the odd part is first order: halving ε halves it
    assert report.halving_ratio_odd == pytest.approx(2.0, rel=0.05)


def test_wrong_force_varies_more_than_newtonian(escape_stationarity):
    report = escape_stationarity
    newton = max(abs(a) for a in report.first_order)
    wrong = max(abs(a) for a in report.control.first_order)
    assert wrong > 1.5 * newton
    assert report.control.euler_lagrange_residual > 0.1
    assert report.euler_lagrange_residual < 1e-3


def test_free_motion_is_stationary(escape, natural_units):
    traj, dyn = escape
    free = free_trajectories(traj.positions(0.0), traj.velocities(0.0), natural_units)
    report = lemma4_stationarity_check(free, dyn, 1.0, 0.0, 1e4, rho=5.0, control_scale=None)
    assert report.stationary is True
    assert report.first_order_rel < 1e-6
    assert report.control is None


def test_stationarity_skipped_outside_validity(escape):
    traj, dyn = escape
    report = lemma4_stationarity_check(traj, dyn, 1.0, 0.0, 1e4, rho=1.0)
    assert report.skipped
    assert math.isnan(report.ratio)
