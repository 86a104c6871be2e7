"""Tests for the coupling cubic, the L0 selection rule and optimize_g."""
import math

import pytest

from src.coupling import (
    CubicProblem,
    L0SelectionRule,
    curvature_in_a1,
    existence_bound,
    existence_scan,
    g_from_c4,
    g_independent_of_r,
    optimize_g,
    solve_cubic,
    solve_l0_selection,
    weak_coupling_root,
)
from src.errors import NoSolutionError


@pytest.mark.parametrize("a0", [4.0, 8.0, 32.0])
@pytest.mark.parametrize("k_R", [1e-3, 0.1, 1.0])
def test_cubic_root(a0, k_R):
    prob = CubicProblem(a0=a0, k_R=k_R)
    x = solve_cubic(prob)
    assert x > 0
    assert prob.relative_residual(x) < 1e-10
    assert weak_coupling_root(prob) == pytest.approx(x, rel=1e-2)


def test_cubic_root_is_a_curvature_maximum():
    a0, k_R = 8.0, 0.1
    x = solve_cubic(CubicProblem(a0=a0, k_R=k_R))
    a1 = 1.0 / x ** 2
    peak = curvature_in_a1(a0, k_R, a1, simplified=True)
    for factor in (0.9, 0.99, 1.01, 1.1):
        assert curvature_in_a1(a0, k_R, a1 * factor, simplified=True) < peak


def test_cubic_handles_huge_exponent():
    prob = CubicProblem(a0=500.0, k_R=0.1)
    x = solve_cubic(prob)
    assert math.isfinite(x)
    assert prob.relative_residual(x) < 1e-10


def test_cubic_needs_positive_coupling():
    with pytest.raises(NoSolutionError):
        CubicProblem(a0=8.0, k_R=0.0)


def test_existence_bound_is_exact():
    rule = L0SelectionRule(beta0=1e12)
    assert existence_scan(rule) == pytest.approx(existence_bound(rule), rel=1e-9)


def test_selection_roots_solve_the_rule():
    rule = L0SelectionRule(beta0=1e12)
    roots = solve_l0_selection(rule, 1e4)
    assert len(roots) == 2
    assert roots[0] < roots[1]
    for L0 in roots:
        assert abs(rule.log_residual(L0, 1e4)) < 1e-9


def test_no_selection_root_beyond_bound(natural_units):
    rule = L0SelectionRule(beta0=1e12)
    assert solve_l0_selection(rule, 2.0 * existence_bound(rule)) == []
    with pytest.raises(NoSolutionError):
        optimize_g(2.0 * existence_bound(rule), 1.0, natural_units, beta0=1e12)


@pytest.mark.parametrize("r", [1e3, 1e4, 1e5])
def test_coupling_is_independent_of_radius(natural_units, r):
    rule = L0SelectionRule(beta0=1e12)
    g_ref = g_independent_of_r(rule, 1.0, natural_units)
    for L0 in solve_l0_selection(rule, r):
        assert g_from_c4(r, L0, 1.0, natural_units) == pytest.approx(g_ref, rel=1e-6)


def test_negative_c4_has_no_coupling(natural_units):
    with pytest.raises(NoSolutionError, match="c4"):
        g_from_c4(1e4, 200.0, -1.0, natural_units)
    assert g_from_c4(1e4, 200.0, 0.0, natural_units) == 0.0


def test_optimize_g_weak_coupling(natural_units):
    res = optimize_g(1e4, 1.0, natural_units, beta0=1e12)
    assert res["weak_coupling_valid"]
    assert res["g"] == pytest.approx(res["g_weak_coupling"], rel=1e-2)
    assert res["g"] == pytest.approx(res["g_r_independent"], rel=1e-2)
    assert res["cubic_residual"] < 1e-10
    assert res["curvature"] < 0


def test_optimize_g_needs_l0_or_beta0(natural_units):
    with pytest.raises(ValueError):
        optimize_g(1e4, 1.0, natural_units)
