"""Tests for units, trajectories and the Kepler solution."""
import math

import numpy as np
import pytest

from src.core_model import (
    AMU_KG,
    KeplerOrbit,
    PairPotential,
    UnitSystem,
    center_of_mass_drift,
    circular_two_body,
    classical_quantities,
    dump_trajectory,
    free_trajectories,
    gravity_length,
    integrate_newton,
    kepler_comparison,
    kepler_period,
    kepler_radius,
    kepler_time,
    lorentz_factor,
    momenta,
)
from src.errors import OutOfRangeError, SuperluminalError


def test_natural_units_have_unit_compton_length(natural_units):
    assert natural_units.compton_length == 1.0
    assert natural_units.length_unit == "lambda_c"


def test_si_compton_length_for_amu():
    units = UnitSystem.from_mass(AMU_KG)
    assert units.length_unit == "m"
    assert units.compton_length == pytest.approx(2.1184e-16, rel=1e-3)


def test_gravity_length_for_amu():
    # 1.3e-54 m is the rounded figure; G·m/c² gives 1.233e-54 m
    g = gravity_length(UnitSystem.from_mass(AMU_KG))
    assert g == pytest.approx(1.2332e-54, rel=1e-3)
    assert abs(g - 1.3e-54) / 1.3e-54 < 0.06


def test_unit_system_rejects_nonpositive_mass():
    with pytest.raises(ValueError):
        UnitSystem.from_mass(0.0)


def test_circular_orbit_energy_and_speed(circular_orbit):
    for lam in (0.0, 17.0, 250.0):
        cq = classical_quantities(circular_orbit, lam)
        assert cq.e_C == pytest.approx(-0.5 / 40.0, rel=1e-12)
        v = circular_orbit.velocities(lam)
        assert np.linalg.norm(v[0]) == pytest.approx(math.sqrt(0.5 / 40.0), rel=1e-12)
        assert np.linalg.norm(circular_orbit.positions(lam)[0] - circular_orbit.positions(lam)[1]) == pytest.approx(20.0)


def test_free_trajectories_recenter(natural_units):
    traj = free_trajectories([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]], [[0.1, 0.0, 0.0], [0.0, 0.0, 0.0]], natural_units)
    assert traj.recentered
    x_drift, v_drift = center_of_mass_drift(traj, 3.0)
    assert x_drift < 1e-15 and v_drift < 1e-15


def test_integrator_rejects_superluminal(natural_units):
    with pytest.raises(SuperluminalError):
        integrate_newton([[1.0, 0, 0], [-1.0, 0, 0]], [[1.2, 0, 0], [-1.2, 0, 0]],
                         PairPotential.inverse_r(0.1), (0.0, 1.0), units=natural_units)


def test_integrator_reproduces_circular_orbit(natural_units):
    exact = circular_two_body(20.0, 0.5, natural_units)
    traj = integrate_newton(exact.positions(0.0), exact.velocities(0.0), PairPotential.inverse_r(0.5),
                            (0.0, 300.0), tol=1e-12, units=natural_units)
    assert np.allclose(traj.positions(300.0), exact.positions(300.0), rtol=0, atol=1e-7)
    assert traj.global_error < 1e-6


def test_lorentz_factor_and_momenta(circular_orbit):
    v = circular_orbit.velocities(0.0)[0]
    assert lorentz_factor(v) == pytest.approx(1.0 / math.sqrt(1.0 - v @ v))
    q = momenta(circular_orbit, 0.0)
    assert np.allclose(q, circular_orbit.velocities(0.0))
    with pytest.raises(SuperluminalError):
        lorentz_factor(np.array([1.0, 0.0, 0.0]))


@pytest.mark.parametrize("eps", [0.0, 0.3, 0.9])
def test_kepler_orbit_matches_integrator(natural_units, eps):
    orbit = KeplerOrbit.from_eccentricity(L=1.0, g=1e-3, eps_r=eps)
    res = kepler_comparison(orbit, natural_units, points=60)
    assert res["max_rel_error"] < 1e-6
    assert res["max_e_C_drift"] < 1e-9
    if eps == 0.0:
        assert res["radius_variation"] < 1e-8


def test_kepler_period_matches_time_integral():
    orbit = KeplerOrbit.from_eccentricity(L=1.0, g=1e-3, eps_r=0.3)
    assert kepler_time(orbit, 0.0, 2.0 * math.pi) == pytest.approx(kepler_period(orbit), rel=1e-9)


def test_circular_kepler_orbit_period():
    orbit = KeplerOrbit.circular(20.0, 0.5)
    assert orbit.eps_r == pytest.approx(0.0, abs=1e-7)
    assert kepler_period(orbit) == pytest.approx(2.0 * math.pi / math.sqrt(2.0 * 0.5 / 20.0 ** 3), rel=1e-12)


def test_unbound_orbit_has_no_period_and_limited_angles():
    orbit = KeplerOrbit.from_eccentricity(L=1.0, g=1e-3, eps_r=1.5)
    assert not orbit.is_bound
    with pytest.raises(OutOfRangeError):
        kepler_period(orbit)
    with pytest.raises(OutOfRangeError):
        kepler_radius(orbit, 0.0)
    assert kepler_radius(orbit, math.pi) == pytest.approx(orbit.semi_latus / 2.5)


def test_energy_below_circular_minimum_rejected():
    with pytest.raises(ValueError):
        KeplerOrbit(L=1.0, e_C=-1.0, g=1e-3)


def test_dump_trajectory_rows(circular_orbit):
    rows = dump_trajectory(circular_orbit, [0.0, 1.0])
    assert len(rows) == 4
    assert rows[0]["x"] == pytest.approx(10.0)
    assert set(rows[0]) == {"lambda", "k", "x", "y", "z", "vx", "vy", "vz"}
