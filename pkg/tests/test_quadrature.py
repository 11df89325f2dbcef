"""Tests for hyperelliptic quadrature and the closure formulas"""

import numpy as np
import pytest
from scipy import integrate

from confocal.errors import IntervalError, NotFound, SeparationError
from confocal.geometry.quadrature import (
    I1,
    J2,
    J3,
    ONE,
    U,
    U2,
    critical_pen_parameter,
    curvature_budget,
    darboux_residuals,
    half_turn_criterion,
    hyperelliptic,
    integrate_smooth,
    monic,
    pen_sweep,
    perimeter_formula,
    reference_integral,
    root_interval_integral,
    solve_closure,
    sweep_integral,
    thread_residual,
    winding_sum,
)
from confocal.schemas.geometry import CharacteristicRadical, WindingCounts


def test_arcsin_closed_form():
    """Test the full and half arcsin integrals"""
    full = root_interval_integral((1.0, 3.0), -1.0, [ONE, U], 1.0, 3.0)
    assert full[0] == pytest.approx(np.pi, rel=1e-12)
    assert full[1] == pytest.approx(2.0 * np.pi, rel=1e-12)
    half = root_interval_integral((1.0, 3.0), -1.0, [ONE], 1.0, 2.0)
    assert half[0] == pytest.approx(0.5 * np.pi, rel=1e-12)


def test_reversed_interval_changes_sign():
    forward = root_interval_integral((1.0, 3.0), -1.0, [ONE], 1.5, 2.5)
    backward = root_interval_integral((1.0, 3.0), -1.0, [ONE], 2.5, 1.5)
    assert backward[0] == pytest.approx(-forward[0], rel=1e-14)


def test_node_doubling_converges(rad):
    """Test the adaptive rule against a fixed large rule"""
    for poly in (ONE, U, U2):
        adaptive = hyperelliptic(rad, poly, 2.0, 3.0)
        fixed = hyperelliptic(rad, poly, 2.0, 3.0, nodes=4096)
        assert adaptive == pytest.approx(fixed, rel=1e-10)


def test_reference_integral(rad):
    """Test against scipy's algebraic endpoint weight"""
    for poly in (ONE, U, monic(0.0, 1.5)):
        assert I1(rad, poly) == pytest.approx(reference_integral(rad, poly), rel=1e-9)


def test_integrate_smooth_batch():
    def f(x):
        return np.array([np.cos(x), x ** 2])

    value = integrate_smooth(f, 0.0, 1.0)
    assert value == pytest.approx([np.sin(1.0), 1.0 / 3.0], rel=1e-13)


def test_left_interval_additivity(planar_rad):
    """Test that the integral to -inf splits at an interior point"""
    whole = hyperelliptic(planar_rad, ONE, -np.inf, 0.0)
    parts = hyperelliptic(planar_rad, ONE, -np.inf, -1.0) + hyperelliptic(planar_rad, ONE, -1.0, 0.0)
    assert whole == pytest.approx(parts, rel=1e-10)


def test_left_interval_divergence(planar_rad):
    with pytest.raises(IntervalError):
        hyperelliptic(planar_rad, U, -np.inf, 0.0)


def test_interval_errors(rad):
    """Test intervals crossing a root or where the radical is negative"""
    with pytest.raises(IntervalError):
        hyperelliptic(rad, ONE, 1.2, 2.5)
    with pytest.raises(IntervalError):
        hyperelliptic(rad, ONE, 1.6, 1.9)


def test_separation_error():
    with pytest.raises(SeparationError):
        CharacteristicRadical(axes=(3.0, 2.0, 1.0), u2_0=2.5, u3_0=0.0)


def test_radical_sign_is_fixed(rad, planar_rad):
    """Test that the leading sign is a class constant, not a field"""
    assert "kappa" not in CharacteristicRadical.model_fields
    assert "kappa" not in rad.model_dump()
    assert rad.kappa == planar_rad.kappa == -1.0
    # leading coefficient of Delta is kappa
    assert rad.delta(1e4) / 1e20 == pytest.approx(rad.kappa, rel=1e-3)


def test_named_integrals_positive(rad):
    p = monic(rad.u3_0)
    assert I1(rad, p) > 0
    assert J2(rad, p) > 0
    assert J3(rad, p, -1.0) < 0


def test_winding_sum_linear(rad):
    total = winding_sum(rad, ONE, -1.0, 2, 4, 3)
    assert total == pytest.approx(2 * I1(rad, ONE) - 4 * J2(rad, ONE) + 3 * J3(rad, ONE, -1.0), rel=1e-13)


def test_darboux_residuals_need_outer_vertices(rad):
    with pytest.raises(IntervalError):
        darboux_residuals(rad, 0.5, WindingCounts(n=2, n_prime=2, m=3))


def test_thread_residual_uses_shifted_weight(rad):
    w = WindingCounts(n=2, n_prime=2, m=1)
    assert thread_residual(rad, -1.0, w) == pytest.approx(winding_sum(rad, monic(0.0), -1.0, 2, 2, 1))


def test_perimeter_variants(rad):
    """Test that the mixed form with two rectilinear pieces equals the thread form"""
    staud = perimeter_formula(rad, -1.0, variant="staud")
    assert perimeter_formula(rad, -1.0, WindingCounts(n=2, n_prime=2, m=2), variant="staud1") == pytest.approx(staud)
    darb = perimeter_formula(rad, -1.0, WindingCounts(n=2, n_prime=2, m=3))
    assert darb == pytest.approx(winding_sum(rad, U2, -1.0, 2, 2, 3))
    with pytest.raises(ValueError):
        perimeter_formula(rad, -1.0, variant="darb")
    with pytest.raises(ValueError):
        perimeter_formula(rad, -1.0, WindingCounts(n=2, n_prime=2, m=3), variant="unknown")


def test_curvature_budget_definition(rad):
    assert curvature_budget(rad, -0.7) == pytest.approx(4.0 * (half_turn_criterion(rad) - pen_sweep(rad, -0.7)))


def test_pen_sweep_grows_with_distance(rad):
    sweeps = [pen_sweep(rad, u) for u in (-0.1, -1.0, -10.0)]
    assert sweeps[0] < sweeps[1] < sweeps[2]


@pytest.mark.parametrize("u2_0", [1.05, 1.5, 1.95])
def test_critical_pen_parameter(axes3, u2_0):
    """Test that the regime agrees with the sign of the curvature budget"""
    rad = CharacteristicRadical(axes=axes3, u2_0=u2_0, u3_0=0.0)
    regime = critical_pen_parameter(rad)
    assert regime.regime in ("always", "critical", "never")
    if regime.regime == "never":
        assert regime.half_turn <= 0
        assert curvature_budget(rad, -0.5) < 0
    elif regime.regime == "always":
        assert curvature_budget(rad, -100.0) > 0
    else:
        assert curvature_budget(rad, regime.critical_u3_1) == pytest.approx(0.0, abs=1e-9)
        assert curvature_budget(rad, 0.5 * (regime.critical_u3_1 + rad.u3_0)) > 0


def test_sweep_integral_quarter_turns(rad):
    """Test that a monotone quarter turn sweeps the whole interval once"""
    assert sweep_integral(rad, 1, 0.0, 0.5 * np.pi, ONE) == pytest.approx(I1(rad, ONE), rel=1e-12)
    assert sweep_integral(rad, 1, 0.0, np.pi, ONE) == pytest.approx(2 * I1(rad, ONE), rel=1e-12)
    assert sweep_integral(rad, 2, -0.5 * np.pi, 0.5 * np.pi, ONE) == pytest.approx(2 * J2(rad, ONE), rel=1e-12)
    assert sweep_integral(rad, 1, 0.8, 0.3, ONE) == pytest.approx(-sweep_integral(rad, 1, 0.3, 0.8, ONE))


def test_solve_closure_thread(rad):
    """Test the one-dimensional thread closure"""
    w = WindingCounts(n=2, n_prime=2, m=8)
    assert critical_pen_parameter(rad).regime == "always"
    solution = solve_closure(rad.axes, rad.u3_0, w, mode="thread1", u2_0=rad.u2_0)
    assert solution.u3_1 < rad.u3_0
    assert abs(thread_residual(rad, solution.u3_1, w)) < 1e-10


@pytest.mark.parametrize("scale", [(1.1, 0.9), (1.05, 0.95), (1.1, 0.99), (1.01, 0.9)])
def test_solve_closure_thread_perturbed_bracket(rad, scale):
    """Test that brackets within ten percent of the root return the same root"""
    w = WindingCounts(n=2, n_prime=2, m=8)
    root = solve_closure(rad.axes, rad.u3_0, w, mode="thread1", u2_0=rad.u2_0).u3_1
    again = solve_closure(rad.axes, rad.u3_0, w, mode="thread1", u2_0=rad.u2_0, bracket=(root * scale[0], root * scale[1]))
    assert again.u3_1 == pytest.approx(root, abs=1e-8)


def test_solve_closure_thread_without_turns(rad):
    """Test that a thread with no plane crossings or tangencies collapses onto the caustic"""
    solution = solve_closure(rad.axes, rad.u3_0, WindingCounts(n=0, n_prime=0, m=3), mode="thread1", u2_0=rad.u2_0)
    assert solution.u3_1 == rad.u3_0
    assert solution.residual == 0.0


def test_solve_closure_darboux(axes3):
    """Test that a solved billiard satisfies both rationality conditions"""
    w = WindingCounts(n=6, n_prime=8, m=40)
    solution = solve_closure(axes3, 0.0, w, mode="darboux2", grid_size=32)
    assert 1.0 < solution.u2_0 < 2.0
    assert solution.u3_1 < 0.0
    rad = CharacteristicRadical(axes=axes3, u2_0=solution.u2_0, u3_0=0.0)
    r1, r2 = darboux_residuals(rad, solution.u3_1, w)
    assert abs(r1) < 1e-9 and abs(r2) < 1e-9


def test_solve_closure_darboux_absent(axes3):
    """Test certified absence: with n' = 2n the condition with P = u stays negative on the whole grid"""
    w = WindingCounts(n=2, n_prime=4, m=5)
    with pytest.raises(NotFound) as info:
        solve_closure(axes3, 0.0, w, mode="darboux2", grid_size=8)
    grid = info.value.grid
    assert len(grid) == 8 * 8
    assert all(sample["r2"] < 0 for sample in grid)


def test_solve_closure_unknown_mode(axes3):
    with pytest.raises(ValueError):
        solve_closure(axes3, 0.0, WindingCounts(n=2, n_prime=2, m=3), mode="bogus")


def test_darb1_differs_from_darb_by_the_second_condition(axes3):
    """Test that the shifted weight u (u - u3_0) subtracts u3_0 times the P = u residual"""
    rad = CharacteristicRadical(axes=axes3, u2_0=1.5, u3_0=0.4)
    w = WindingCounts(n=2, n_prime=2, m=3)
    darb = perimeter_formula(rad, -1.0, w, variant="darb")
    darb1 = perimeter_formula(rad, -1.0, w, variant="darb1")
    _, r2 = darboux_residuals(rad, -1.0, w)
    assert darb1 == pytest.approx(darb - 0.4 * r2, rel=1e-12)
    assert darb1 == pytest.approx(winding_sum(rad, (0.0, -0.4, 1.0), -1.0, 2, 2, 3), rel=1e-12)


def test_half_turn_limit_at_the_umbilics(axes3):
    """Test that as u2_0 -> a2 the criterion tends to a principal value over (a3, a1)"""
    a1, a2, a3 = axes3
    c, r = 0.5 * (a1 + a3), 0.5 * (a1 - a3)
    theta0 = np.arcsin((a2 - c) / r)

    def f(theta):
        # u = c + r sin(theta) clears the endpoint radical; the pole at a2 becomes the Cauchy weight
        gap = np.sin(theta) - np.sin(theta0)
        ratio = 1.0 / np.cos(theta0) if abs(theta - theta0) < 1e-12 else (theta - theta0) / gap
        return np.sqrt(c + r * np.sin(theta)) * ratio / r

    principal, _ = integrate.quad(f, -0.5 * np.pi, 0.5 * np.pi, weight="cauchy", wvar=theta0, epsabs=1e-12, limit=200)
    near = [half_turn_criterion(CharacteristicRadical(axes=axes3, u2_0=a2 - eps, u3_0=0.0)) for eps in (1e-2, 1e-6)]
    assert principal > 0
    assert near[1] == pytest.approx(principal, abs=1e-3)
    assert abs(near[1] - principal) < abs(near[0] - principal)
