"""Tests for billiard polygons, Poncelet closure and dualization"""

import numpy as np
import pytest

from confocal.errors import ConeDegeneracyError, HypothesisError, NoRealTangentError, NotFound
from confocal.experiments.billiards import Darboux3DExperiment, Darboux3DParams, count_mismatch
from confocal.geometry.billiards import (
    build_polygon,
    chasles_polygon_2d,
    dualize_polygon,
    poncelet_parameter,
    poncelet_perimeter,
    poncelet_residual,
    reflection_residual,
    sweep_identity,
    tangent_lines_from_point,
    thread_reflection_residuals,
)
from confocal.geometry.core import eval_Q, ivory_affinity, tangency_spectrum
from confocal.geometry.quadrature import ONE, U, U2, darboux_residuals, perimeter_formula, solve_closure
from confocal.geometry.threads import pen_point
from confocal.schemas.geometry import CharacteristicRadical, ConfocalFamily, Line, WindingCounts

AXES2 = (2.0, 1.0)
DARBOUX_W = WindingCounts(n=6, n_prime=8, m=40)


@pytest.fixture(scope="module")
def triangle_z():
    return poncelet_parameter(AXES2, 2, 3)


def test_tangent_lines_planar(family2):
    """Test the two tangents from a point outside the ellipse"""
    lines = tangent_lines_from_point(AXES2, (2.0, 1.5), 0.0)
    assert len(lines) == 2
    for line in lines:
        assert tangency_spectrum(family2, line).contains(0.0, tol=1e-8)


def test_tangent_lines_spatial(family3):
    """Test the four common tangents of an ellipsoid and a hyperboloid"""
    x = np.array([1.5, 1.0, 0.5])
    lines = tangent_lines_from_point(family3.axes, x, 1.5, 0.0)
    assert len(lines) == 4
    for line in lines:
        spectrum = tangency_spectrum(family3, line)
        assert spectrum.contains(1.5, tol=1e-7)
        assert spectrum.contains(0.0, tol=1e-7)


def test_tangent_lines_errors(family3):
    with pytest.raises(NoRealTangentError):
        tangent_lines_from_point(AXES2, (0.1, 0.1), 0.0)
    with pytest.raises(ConeDegeneracyError):
        tangent_lines_from_point(family3.axes, (1.2, 0.9, 1.1), 0.0, 0.0)
    with pytest.raises(ValueError):
        tangent_lines_from_point(family3.axes, (1.2, 0.9, 1.1), 0.0)


def test_poncelet_parameter_solves_residual(triangle_z):
    assert triangle_z < 0
    assert abs(poncelet_residual(AXES2, triangle_z, 2, 3)) < 1e-10


@pytest.mark.parametrize("theta", [0.0, 0.4, 1.3, 2.9, 4.4])
def test_poncelet_triangle(triangle_z, theta):
    """Test that triangles about the ellipse close and share the predicted perimeter"""
    poly = chasles_polygon_2d(AXES2, [triangle_z], theta, laps=3)
    assert poly.closed
    assert len(poly.vertices) == 3
    assert poly.perimeter == pytest.approx(poncelet_perimeter(AXES2, triangle_z, 2, 3), rel=1e-8)
    assert max(thread_reflection_residuals(poly, AXES2)) < 1e-8


def test_chasles_polygon_tangency(triangle_z, family2):
    poly = chasles_polygon_2d(AXES2, [triangle_z, -0.5], 0.7, laps=2)
    for seg in poly.segments:
        a, b = (np.asarray(p) for p in seg.points)
        assert tangency_spectrum(family2, Line.through(a, b - a)).contains(0.0, tol=1e-8)


def test_chasles_polygon_rejects_inner_ellipse():
    with pytest.raises(HypothesisError):
        chasles_polygon_2d(AXES2, [0.5], 0.0)


def test_poncelet_parameter_not_found():
    """Test that winding counts without a vertex ellipse are reported"""
    with pytest.raises(NotFound):
        poncelet_parameter(AXES2, 2, 1)


def test_dualization(triangle_z, family2):
    """Test that the dual polygon is closed, keeps its perimeter and has period two"""
    poly = chasles_polygon_2d(AXES2, [triangle_z], 0.9, laps=3)
    dual = dualize_polygon(poly, AXES2)
    assert dual.closed
    assert dual.closure_gap < 1e-8
    assert dual.perimeter == pytest.approx(poly.perimeter, rel=1e-9)
    for seg in dual.segments:
        a, b = (np.asarray(p) for p in seg.points)
        assert tangency_spectrum(family2, Line.through(a, b - a)).contains(0.0, tol=1e-8)
        assert abs(eval_Q(family2, 0.0, seg.tangencies[0])) < 1e-10
    back = dualize_polygon(dual, AXES2)
    d = np.linalg.norm(back.vertex_array()[:, None, :] - poly.vertex_array()[None, :, :], axis=-1)
    assert d.min(axis=1).max() < 1e-8


def test_dualize_vertices_are_ivory_images_of_contacts(triangle_z):
    poly = chasles_polygon_2d(AXES2, [triangle_z], 0.2, laps=3)
    dual = dualize_polygon(poly, AXES2)
    family = ConfocalFamily(axes=AXES2)
    for seg, vertex in zip(poly.segments, dual.vertices):
        expected = ivory_affinity(family, 0.0, triangle_z, np.asarray(seg.tangencies[0]))
        assert np.allclose(vertex.point, expected, atol=1e-8)


def test_dualize_requires_closed():
    poly = chasles_polygon_2d(AXES2, [-0.9], 0.3, laps=1)
    assert not poly.closed
    with pytest.raises(HypothesisError):
        dualize_polygon(poly, AXES2)


def test_dualize_rejects_spatial_input(triangle_z):
    """Test that a polygon with two caustics or spatial axes is refused"""
    poly = chasles_polygon_2d(AXES2, [triangle_z], 0.9, laps=3)
    with pytest.raises(HypothesisError):
        dualize_polygon(poly.model_copy(update={"caustics": (0.0, 0.5)}), AXES2)
    with pytest.raises(HypothesisError):
        dualize_polygon(poly, (3.0, 2.0, 1.0))



def test_reflection_residual_symmetric(family2):
    """Test a vertex where the chords are mirror images in the normal"""
    vertex = (np.sqrt(2.0), 0.0)
    assert reflection_residual(family2, 0.0, vertex, (0.0, 1.0), (0.0, -1.0)) < 1e-14
    assert reflection_residual(family2, 0.0, vertex, (0.0, 1.0), (0.0, 0.5)) > 1e-3


def test_sweep_identity_open_polygon(rad):
    """Test the chord sweeps of an open billiard path"""
    start = pen_point(rad, -1.0, 0.7)
    poly = build_polygon(rad.axes, start, rad.u2_0, rad.u3_0, steps=4)
    total = sweep_identity(rad, poly, (ONE, U, U2))
    assert abs(total[0]) < 1e-6
    assert abs(total[1]) < 1e-6
    assert 0.5 * total[2] == pytest.approx(poly.perimeter, rel=1e-6)


def test_build_polygon_chords(rad, family3):
    """Test that every chord touches both caustics and every vertex reflects"""
    start = pen_point(rad, -1.0, 0.7)
    poly = build_polygon(rad.axes, start, rad.u2_0, rad.u3_0, steps=5)
    for seg in poly.segments:
        a, b = (np.asarray(p) for p in seg.points)
        spectrum = tangency_spectrum(family3, Line.through(a, b - a))
        assert spectrum.contains(rad.u2_0, tol=1e-7)
        assert spectrum.contains(rad.u3_0, tol=1e-7)
    points = [np.asarray(s.points[0]) for s in poly.segments] + [np.asarray(poly.segments[-1].points[1])]
    for j in range(1, len(points) - 1):
        assert reflection_residual(family3, -1.0, points[j], points[j - 1], points[j + 1]) < 1e-8


def test_build_polygon_inside_caustic(rad):
    with pytest.raises(HypothesisError):
        build_polygon(rad.axes, (0.1, 0.1, 0.1), rad.u2_0, rad.u3_0, steps=3)


@pytest.fixture(scope="module")
def darboux_solution():
    return solve_closure((3.0, 2.0, 1.0), 0.0, DARBOUX_W, mode="darboux2", grid_size=32)


def test_darboux_closed_billiard(axes3, darboux_solution):
    """Test closure, counts and one perimeter over 32 starting points of a solved spatial billiard"""
    rad = CharacteristicRadical(axes=axes3, u2_0=darboux_solution.u2_0, u3_0=0.0)
    u3_1 = darboux_solution.u3_1
    predicted = perimeter_formula(rad, u3_1, DARBOUX_W)
    perimeters = []
    for k in range(32):
        start = pen_point(rad, u3_1, 2.0 * np.pi * (k + 0.5) / 32)
        poly = build_polygon(axes3, start, rad.u2_0, rad.u3_0, DARBOUX_W.m)
        assert poly.closed
        assert (poly.counts["n"], poly.counts["n_prime"], poly.counts["m"]) == (6, 8, 40)
        perimeters.append(poly.perimeter)
    assert np.ptp(perimeters) < 1e-6 * predicted
    assert np.allclose(perimeters, predicted, rtol=1e-6)
    r1, r2 = darboux_residuals(rad, u3_1, DARBOUX_W)
    assert abs(r1) < 1e-8 and abs(r2) < 1e-8


def test_darboux_experiment_reports_count_mismatch(darboux_solution):
    """Test that a closed realization with other counts is kept and scored by the mismatch"""
    params = Darboux3DParams(spectrum_lines=0, starts=2, candidates=[(6, 8, 40)])
    experiment = Darboux3DExperiment(params, np.random.default_rng(0))
    wrong = WindingCounts(n=2, n_prime=2, m=40)
    axes = (3.0, 2.0, 1.0)
    rad = CharacteristicRadical(axes=axes, u2_0=darboux_solution.u2_0, u3_0=0.0)
    poly = experiment._closing_polygon(axes, rad, darboux_solution.u3_1, wrong, 0.3)
    assert poly is not None and poly.closed
    measured = WindingCounts(n=poly.counts["n"], n_prime=poly.counts["n_prime"], m=poly.counts["m"])
    assert count_mismatch(measured, wrong) == 6
    assert count_mismatch(measured, DARBOUX_W) == 0

    records = experiment.run()
    assert len(records) == 2
    assert all(r.values["counts"] == "6,8,40" for r in records)
    assert max(r.deviation for r in records) < 1e-5
