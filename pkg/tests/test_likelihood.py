"""Tests for regime selection, transition amplitudes and the circular-orbit likelihood."""
import math

import pytest

from src.coupling import second_derivative_at_zero
from src.errors import GeometryError
from src.evaluation import coplanar_grid
from src.likelihood import (
    CircularOrbitCase,
    Regime,
    amplitude,
    amplitude_over_lambda,
    circular_case,
    circular_orbit_amplitude,
    coplanar_angles,
    coplanar_bound_check,
    second_difference,
    select_regime,
    small_theta_coefficient,
)

OMEGA = math.sqrt(2.0 * 0.5 / 20.0 ** 3)   # circular_orbit fixture


@pytest.mark.parametrize(
    "norms, expected",
    [
        ((1.0, 1e3, 1.0, 1e3), Regime.PARTICLE_LIKE),
        ((1e3, 1.0, 1.0, 1e3), Regime.TRANSITION),
        ((1e3, 1.0, 1e3, 1.0), Regime.WAVE_LIKE),
        ((1.0, 0.0, 1.0, 0.0), Regime.WAVE_LIKE),
        ((1.0, 1.0, 1.0, 1.0), None),
    ],
)
def test_select_regime(norms, expected):
    assert select_regime(*norms) == expected


def test_amplitude_is_one_at_equal_times(circular_orbit):
    res = amplitude(circular_orbit, 5.0, 5.0, 2.0, 2.0)
    assert res.regime == Regime.WAVE_LIKE
    assert res.amplitude == pytest.approx(1.0, rel=1e-12)


def test_wave_like_amplitude_matches_circular_form(circular_orbit, natural_units):
    theta = 0.5
    res = amplitude(circular_orbit, theta / OMEGA, 0.0, 2.0, 2.0)
    case = circular_case(20.0, 0.5, 2.0, 0.0, natural_units)
    assert res.amplitude == pytest.approx(circular_orbit_amplitude(case, theta), rel=1e-8)


def test_particle_like_amplitude(circular_orbit):
    lam = 30.0
    res = amplitude(circular_orbit, lam, 0.0, 2.0, 2.0, c2n=1.0, regime=Regime.PARTICLE_LIKE)
    expected = math.exp(-lam ** 2 * 0.5 / (8.0 * 2.0 ** 2 * 20.0))
    assert res.amplitude == pytest.approx(expected, rel=1e-9)


def test_amplitude_rejects_bad_inputs(circular_orbit):
    with pytest.raises(ValueError):
        amplitude(circular_orbit, 1.0, 0.0, 2.0, 2.0, c2n=-1.0)
    with pytest.raises(ValueError):
        amplitude(circular_orbit, 1.0, 0.0, 2.0, 2.0, regime=Regime.TRANSITION)
    with pytest.raises(ValueError):
        amplitude(circular_orbit, 1.0, 0.0, 2.0, 2.0, n=3)


def test_circular_amplitude_is_one_at_zero():
    case = CircularOrbitCase.from_constants(a0=8.0, a1=2.0, c_R=0.5)
    assert circular_orbit_amplitude(case, 0.0) == pytest.approx(1.0, rel=1e-15)


def test_from_constants_round_trips(natural_units):
    case = CircularOrbitCase.from_constants(a0=12.0, a1=3.0, c_R=0.3, L0=2.0)
    again = circular_case(case.r, case.g, case.L0, case.c4, natural_units)
    assert again.a0 == pytest.approx(12.0)
    assert again.a1 == pytest.approx(3.0)
    assert again.c_R == pytest.approx(0.3)


def test_small_theta_curvature_matches_finite_difference():
    case = CircularOrbitCase.from_constants(a0=12.0, a1=3.0, c_R=0.3)
    fd = second_difference(lambda t: circular_orbit_amplitude(case, t))
    assert fd == pytest.approx(-2.0 * small_theta_coefficient(case), rel=1e-6)
    assert fd == pytest.approx(second_derivative_at_zero(case), rel=1e-6)


@pytest.mark.parametrize("a0", [2.0, 4.0, 16.0])
@pytest.mark.parametrize("frac", [0.05, 0.5])
def test_amplitude_is_small_at_theta_4(a0, frac):
    case = CircularOrbitCase.from_constants(a0, frac * a0, 0.9)
    assert circular_orbit_amplitude(case, 4.0) < 1e-3


def test_coplanar_bound_on_grid():
    for case, theta in coplanar_grid():
        half = 0.5 * theta / case.omega
        assert coplanar_bound_check(amplitude_over_lambda(case), half, half)["holds"], (case, theta)


def test_coplanar_bound_rejects_negative_lambda():
    with pytest.raises(ValueError):
        coplanar_bound_check(lambda lam: 1.0, -1.0, 1.0)


def test_coplanar_angles_in_plane():
    c1 = math.cos(0.3)
    res = coplanar_angles(c1, c1, math.cos(0.6))
    assert res["beta"] == pytest.approx(0.0, abs=1e-6)
    assert res["bound_ok"]


def test_coplanar_angles_out_of_plane():
    c1 = math.cos(0.3)
    res = coplanar_angles(c1, c1, math.cos(0.4))
    assert res["beta"] > 0.0
    assert res["cos2_beta"] == pytest.approx(2.0 * c1 ** 2 / (1.0 + math.cos(0.4)))


def test_coplanar_angles_unrealizable():
    with pytest.raises(GeometryError):
        coplanar_angles(1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        coplanar_angles(-0.1, 0.5, 0.5)
