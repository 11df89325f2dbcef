"""Tests for the string construction, Staude threads and mixed threads"""

import numpy as np
import pytest

from confocal.errors import ClosureResidualError, InfeasibleThreadError
from confocal.geometry.quadrature import (
    I1,
    critical_pen_parameter,
    curvature_budget,
    half_turn_criterion,
    monic,
    perimeter_formula,
    solve_closure,
)
from confocal.geometry.threads import (
    T1_COUNTS,
    CurvatureBudget,
    absorbed_weight,
    assemble_staude_thread,
    curvature_weight,
    ellipse_arc_length,
    graves_excess,
    graves_reflection,
    graves_tangent_length,
    graves_vertex,
    mixed_thread_length,
    pen_point,
    tangency_residuals,
    thread_counts,
)
from confocal.schemas.geometry import CharacteristicRadical, WindingCounts

STAUDE_W = WindingCounts(n=2, n_prime=2, m=1)


def test_ellipse_arc_length_circle():
    assert ellipse_arc_length(1.0, 1.0, 0.0, np.pi) == pytest.approx(np.pi, rel=1e-13)
    assert ellipse_arc_length(4.0, 1.0, 0.0, 2.0 * np.pi) == pytest.approx(9.688448220547675, rel=1e-12)


@pytest.mark.parametrize("a1,a2,z", [(2.0, 1.0, -1.0), (3.0, 1.2, -0.4), (1.5, 0.3, -2.5)])
def test_graves_constancy(a1, a2, z):
    """Test that the excess is the same for every vertex on the confocal ellipse"""
    thetas = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    excess = np.array([graves_excess(a1, a2, z, t) for t in thetas])
    scale = np.mean([graves_tangent_length(graves_vertex(a1, a2, z, t)) for t in thetas])
    assert np.ptp(excess) < 1e-8 * scale


@pytest.mark.parametrize("theta0", [0.3, 1.2, 2.0, 2.9])
def test_graves_mirror_symmetry(theta0):
    """Test that mirrored vertices give the same excess and tangent length"""
    assert graves_excess(2.0, 1.0, -1.0, -theta0) == pytest.approx(graves_excess(2.0, 1.0, -1.0, theta0), rel=1e-10, abs=1e-13)
    mirrored = graves_tangent_length(graves_vertex(2.0, 1.0, -1.0, -theta0))
    assert mirrored == pytest.approx(graves_tangent_length(graves_vertex(2.0, 1.0, -1.0, theta0)), rel=1e-12)


def test_graves_vertex_contacts():
    """Test the contact angles and the reflection at both vertices"""
    for theta0 in (0.0, 0.5, 2.0, 4.0):
        vertex = graves_vertex(2.0, 1.0, -1.0, theta0)
        assert max(tangency_residuals(vertex)) < 1e-12
        assert vertex.theta1 < vertex.theta0 < vertex.theta2
        at_z, at_0 = graves_reflection(vertex)
        assert at_z < 1e-10
        assert at_0 < 1e-10


def test_graves_vertex_needs_outer_ellipse():
    with pytest.raises(ValueError):
        graves_vertex(2.0, 1.0, 0.5, 0.0)


def test_pen_point_on_pen_ellipsoid(rad):
    x = pen_point(rad, -0.5, 1.0)
    assert np.sum(x * x / (rad.a + 0.5)) == pytest.approx(1.0, rel=1e-13)
    assert x[2] > 0


def test_staude_thread_length(axes3):
    """Test that threads stretched from different pen positions share one length"""
    rad = CharacteristicRadical(axes=axes3, u2_0=1.5, u3_0=0.0)
    assert critical_pen_parameter(rad).regime == "always"
    assert curvature_budget(rad, -0.5) > 0
    predicted = perimeter_formula(rad, -0.5, variant="staud")
    lengths = []
    for azimuth in (0.3, 1.1, 2.5, 4.0):
        thread = assemble_staude_thread(axes3, 1.5, 0.0, -0.5, azimuth)
        assert thread.topology == "T1"
        assert [p.kind for p in thread.pieces] == [
            "rectilinear", "geodesic", "curvature", "geodesic", "curvature", "geodesic", "rectilinear",
        ]
        assert thread.counts == T1_COUNTS
        assert thread.curvature_budget == pytest.approx(curvature_budget(rad, -0.5), rel=1e-6, abs=1e-9)
        lengths.append(thread.total_length)
    assert np.allclose(lengths, predicted, rtol=1e-6)


def test_staude_split_invariance(axes3):
    """Test that moving the curvature budget between the arcs keeps the length"""
    threads = [assemble_staude_thread(axes3, 1.5, 0.0, -0.5, 0.7, split=s) for s in (0.2, 0.5, 0.8)]
    lengths = [t.total_length for t in threads]
    assert max(lengths) - min(lengths) < 1e-6 * lengths[0]


def test_thread_counts_measured(axes3):
    """Test the counts measured on an assembled thread and on the thread run twice"""
    thread = assemble_staude_thread(axes3, 1.5, 0.0, -0.5, 1.1)
    polyline = np.concatenate([np.asarray(p.points) for p in thread.pieces])
    assert thread_counts(thread.rad, polyline) == {"n": 2, "n_prime": 2, "m": 1}
    twice = np.concatenate([polyline, polyline])
    assert thread_counts(thread.rad, twice) == {"n": 4, "n_prime": 4, "m": 2}


def test_curvature_pieces_vanish_with_criterion(axes3):
    """Test that curvature pieces carry four half-turn criteria and vanish when the criterion does"""
    rad = CharacteristicRadical(axes=axes3, u2_0=1.5, u3_0=0.0)
    piece = [CurvatureBudget(u1_from=2.2, u1_to=2.6)]
    on_caustic = absorbed_weight(rad, 0.0, WindingCounts(n=2, n_prime=2, m=0), piece)
    assert on_caustic == pytest.approx(4.0 * half_turn_criterion(rad), rel=1e-12)
    assert curvature_budget(rad, 0.0) == pytest.approx(on_caustic, rel=1e-12)

    w = WindingCounts(n=6, n_prime=8, m=0)
    solution = solve_closure(axes3, 0.0, w, mode="closed_geodesic")
    closed = CharacteristicRadical(axes=axes3, u2_0=solution.u2_0, u3_0=0.0)
    assert absorbed_weight(closed, 0.0, w) == 0.0
    assert absorbed_weight(closed, 0.0, w, piece) == pytest.approx(0.0, abs=1e-9)


def test_staude_pen_inside_caustic(axes3):
    with pytest.raises(InfeasibleThreadError) as info:
        assemble_staude_thread(axes3, 1.5, 0.0, 0.2, 0.3)
    assert info.value.regime == "never"


def test_curvature_weight_sign(rad):
    piece = CurvatureBudget(u1_from=2.6, u1_to=2.2)
    cusp = CurvatureBudget(u1_from=2.2, u1_to=2.6, cusped=True)
    assert curvature_weight(rad, piece) > 0
    assert curvature_weight(rad, cusp) == pytest.approx(-curvature_weight(rad, piece))


def test_absorbed_weight_is_curvature_budget(rad):
    """Test that the last piece absorbs the budget left by the prescribed ones"""
    first = CurvatureBudget(u1_from=2.1, u1_to=2.3)
    last = CurvatureBudget(u1_from=2.5, u1_to=2.9, cusped=True)
    absorbed = absorbed_weight(rad, -0.5, STAUDE_W, [first, last])
    assert absorbed == pytest.approx(curvature_budget(rad, -0.5) - curvature_weight(rad, first), rel=1e-10)


def test_absorbed_weight_errors(rad):
    with pytest.raises(ClosureResidualError):
        absorbed_weight(rad, -0.5, STAUDE_W)
    full = CurvatureBudget(u1_from=rad.axes[1], u1_to=rad.axes[0])
    # five full sweeps exceed 4 I1 >= the curvature budget
    assert 5 * I1(rad, monic(rad.u3_0)) > curvature_budget(rad, -0.5)
    with pytest.raises(ClosureResidualError):
        absorbed_weight(rad, -0.5, STAUDE_W, [full] * 5 + [CurvatureBudget(u1_from=2.2, u1_to=2.4)])


def test_mixed_thread_length_budget_invariance(rad):
    """Test that the length does not depend on how curvature pieces are prescribed"""
    last = CurvatureBudget(u1_from=2.5, u1_to=2.9, cusped=True)
    plans = [
        [last],
        [CurvatureBudget(u1_from=2.1, u1_to=2.3), last],
        [CurvatureBudget(u1_from=2.1, u1_to=2.3), CurvatureBudget(u1_from=2.4, u1_to=2.2, cusped=True), last],
    ]
    lengths = [mixed_thread_length(rad, -0.5, STAUDE_W, plan) for plan in plans]
    assert lengths == pytest.approx([lengths[0]] * 3, rel=1e-14)
    assert lengths[0] == pytest.approx(perimeter_formula(rad, -0.5, variant="staud"), rel=1e-12)
