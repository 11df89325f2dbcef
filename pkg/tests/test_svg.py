"""Tests for SVG rendering"""

import re

import numpy as np
import pytest
from pydantic import ValidationError

from confocal.errors import EmptySceneError
from confocal.render.svg import (
    Conic,
    Polyline,
    Projection,
    Scene,
    adaptive_curve,
    conic_points,
    ellipsoid_outline,
    render_svg,
    write_svg,
)


def view_box(text):
    match = re.search(r'viewBox="([^"]+)"', text)
    return [float(v) for v in match.group(1).split()]


def test_empty_scene():
    with pytest.raises(EmptySceneError):
        render_svg(Scene())


def test_view_box_contains_vertices():
    """Test that the fitted box holds every vertex with the y axis flipped"""
    points = ((0.0, 0.0), (3.0, 1.0), (-1.0, 2.5))
    text = render_svg(Scene(polylines=(Polyline(points=points, closed=True),)))
    x, y, width, height = view_box(text)
    for px, py in points:
        assert x < px < x + width
        assert y < -py < y + height
    assert text.rstrip().endswith("</svg>")
    assert " Z" in text


def test_conic_points_on_ellipse():
    conic = Conic(semi_axes=(2.0, 1.0), rotation=0.3)
    c, s = np.cos(-0.3), np.sin(-0.3)
    for p in conic_points(conic):
        local = np.array([[c, -s], [s, c]]) @ p
        assert (local[0] / 2.0) ** 2 + local[1] ** 2 == pytest.approx(1.0, abs=1e-12)


def test_adaptive_curve_tolerance():
    """Test that chord midpoints stay close to a circle"""
    pts = adaptive_curve(lambda t: np.array([np.cos(t), np.sin(t)]), 0.0, np.pi, tol=1e-4)
    for a, b in zip(pts, pts[1:]):
        assert 1.0 - np.linalg.norm(0.5 * (a + b)) < 2e-4


def test_ellipsoid_outline_top_view():
    """Test that the view straight down shows the x1, x2 ellipse"""
    outline = ellipsoid_outline((3.0, 2.0, 1.0), Projection(azimuth=0.0, elevation=0.5 * np.pi))
    assert sorted(outline.semi_axes) == pytest.approx([np.sqrt(2.0), np.sqrt(3.0)])


def test_spatial_polyline_is_projected(tmp_path):
    scene = Scene(
        ellipsoids=((3.0, 2.0, 1.0),),
        polylines=(Polyline(points=((0.0, 0.0, 1.0), (1.0, 1.0, 0.0)), kind="geodesic"),),
    )
    path = tmp_path / "scene.svg"
    write_svg(scene, str(path))
    text = path.read_text()
    assert "#2ca02c" in text
    assert text.count("<path") == 2


def test_polyline_rejects_empty_and_mixed_points():
    with pytest.raises(ValidationError):
        Polyline(points=())
    with pytest.raises(ValidationError):
        Polyline(points=((0.0, 0.0), (1.0, 1.0, 1.0)))
