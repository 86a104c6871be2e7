"""Tests for plane-wave limits and the elastic cross section."""
import math

import numpy as np
import pytest

from src.errors import RelativisticInputError
from src.scalar_products import forward_norm_constant
from src.scattering import (
    PipelineParams,
    box_duration,
    box_volume,
    center_of_mass_scenario,
    differential_cross_section,
    energy_shell_integral,
    flux_factor,
    forward_dominance_exponent,
    idempotence_defect,
    numeric_cross_section,
    plane_wave_overlap,
    scattering_angle,
    shell_cross_section,
)


def test_cross_section_is_angle_independent(natural_units):
    values = [
        differential_cross_section(center_of_mass_scenario(0.03, a, 1.0, natural_units))
        for a in (0.3, 0.7, 1.2, 2.0, 2.8)
    ]
    assert max(values) - min(values) <= 1e-12 * values[0]


def test_cross_section_constant(natural_units):
    scen = center_of_mass_scenario(0.03, 1.0, 2.0, natural_units)
    expected = 4.0 / (8.0 * math.pi) * 0.25 * (math.pi / 2.0) ** 3
    assert differential_cross_section(scen) == pytest.approx(expected)
    assert differential_cross_section(scen, exact_jacobian=True) == pytest.approx(expected / 4.0)


def test_relativistic_momenta_are_rejected(natural_units):
    with pytest.raises(RelativisticInputError):
        differential_cross_section(center_of_mass_scenario(0.2, 1.0, 1.0, natural_units))


def test_numeric_pipeline_matches_exact_jacobian(natural_units):
    scen = center_of_mass_scenario(0.03, 1.2, 1.0, natural_units)
    res = numeric_cross_section(scen, 1e4, PipelineParams())
    assert res["ratio_to_exact_jacobian"] == pytest.approx(1.0, abs=0.02)
    assert res["closed_form"] == pytest.approx(4.0 * res["closed_form_exact_jacobian"])


def test_numeric_pipeline_is_a_quarter_of_closed_form(natural_units):
    scen = center_of_mass_scenario(0.03, 1.2, 1.0, natural_units)
    res = numeric_cross_section(scen, 1e4, PipelineParams())
    assert res["ratio_to_closed_form"] == pytest.approx(0.25, rel=0.02)


def test_energy_shell_integral_is_p_omega_over_two(natural_units):
    for p in (0.01, 0.03, 0.08):
        omega = math.sqrt(1.0 + p * p)
        assert energy_shell_integral(p, natural_units) == pytest.approx(0.5 * p * omega, rel=1e-6)


def test_energy_shell_integral_rejects_rest(natural_units):
    with pytest.raises(ValueError):
        energy_shell_integral(0.0, natural_units)


def test_shell_quadrature_fixes_jacobian_factor(natural_units):
    scen = center_of_mass_scenario(0.03, 1.2, 1.0, natural_units)
    omega_sq = 1.0 + 0.03 ** 2
    shell = shell_cross_section(scen)
    assert shell == pytest.approx(differential_cross_section(scen, exact_jacobian=True) * omega_sq, rel=1e-6)
    assert differential_cross_section(scen) / shell == pytest.approx(4.0 / omega_sq, rel=1e-6)


def test_idempotence_defect_falls_as_inverse_square():
    grid = np.linspace(-6.0, 6.0, 2401)
    defects = [idempotence_defect(L0, grid) for L0 in (8.0, 16.0, 32.0)]
    for coarse, fine in zip(defects, defects[1:]):
        assert 3.6 <= coarse / fine <= 4.4


def test_plane_wave_overlap_is_forward_constant(natural_units):
    q = [[0.03, 0.0, 0.0], [-0.03, 0.0, 0.0]]
    value = plane_wave_overlap(q, q, 1e3, natural_units)
    assert value.real == pytest.approx(forward_norm_constant(2, 1e3, natural_units), rel=1e-12)


def test_forward_dominates_as_l0_grows(natural_units):
    scen = center_of_mass_scenario(0.03, 1.0, 1.0, natural_units)
    assert forward_dominance_exponent(scen, (1e3, 1e4)) == pytest.approx(2.0, rel=1e-9)


def test_forward_configuration_detection(natural_units):
    assert center_of_mass_scenario(0.03, 0.0, 1.0, natural_units).is_forward()
    assert center_of_mass_scenario(0.03, math.pi, 1.0, natural_units).is_forward()
    assert not center_of_mass_scenario(0.03, 1.0, 1.0, natural_units).is_forward()


def test_scattering_angle(natural_units):
    assert scattering_angle(center_of_mass_scenario(0.03, 1.2, 1.0, natural_units)) == pytest.approx(1.2)


def test_box_factors(natural_units):
    assert box_volume(2.0) == pytest.approx(8.0 * (math.pi / 2.0) ** 1.5)
    assert box_duration(math.pi / 2.0) == pytest.approx(1.0)
    assert flux_factor([0.03, 0.0, 0.0], natural_units) == pytest.approx(0.06 / math.sqrt(1.0009))
