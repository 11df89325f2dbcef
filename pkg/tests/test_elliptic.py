"""Tests for elliptic coordinates and boundary charts"""

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from confocal.errors import CoordinatePlaneError, InterlacingError, RangeError
from confocal.geometry.core import eval_Q
from confocal.geometry.elliptic import (
    boundary_chart,
    chart_membership,
    identity_residual,
    metric_coeffs,
    to_cartesian,
    to_elliptic,
)
from confocal.schemas.geometry import BoundaryChart, ChartKind, EllipticPoint

AXES = (3.0, 2.0, 1.0)

interior = st.tuples(
    st.floats(2.001, 2.999),
    st.floats(1.001, 1.999),
    st.floats(-20.0, 0.999),
)


def test_to_cartesian_reference_point(family3):
    """Test the squared coordinates of a reference point"""
    p = EllipticPoint(u=(2.5, 1.5, 0.5))
    x = to_cartesian(AXES, p)
    assert x ** 2 == pytest.approx([0.9375, 0.375, 0.1875], rel=1e-14)
    for z in p.u:
        assert abs(eval_Q(family3, z, x)) < 1e-12


def test_to_cartesian_sign_flip():
    """Test that a sign flip negates one coordinate only"""
    x = to_cartesian(AXES, EllipticPoint(u=(2.5, 1.5, 0.5)))
    y = to_cartesian(AXES, EllipticPoint(u=(2.5, 1.5, 0.5), signs=(1, -1, 1)))
    assert np.allclose(y, x * np.array([1, -1, 1]))


def test_to_cartesian_far_field():
    """Test that far level sets approach spheres"""
    x = to_cartesian(AXES, EllipticPoint(u=(2.5, 1.5, -1e8)))
    assert x @ x / 1e8 == pytest.approx(1.0, rel=1e-6)


def test_interlacing_violation():
    with pytest.raises(InterlacingError):
        to_cartesian(AXES, EllipticPoint(u=(1.5, 2.5, 0.5)))


def test_round_trip_reference_point():
    x = to_cartesian(AXES, EllipticPoint(u=(2.5, 1.5, 0.5)))
    assert to_elliptic(AXES, x).u == pytest.approx((2.5, 1.5, 0.5), rel=1e-9)


@hsettings(max_examples=300, deadline=None)
@given(u=interior, signs=st.tuples(*[st.sampled_from((-1, 1))] * 3))
def test_round_trip(u, signs):
    """Test that the inverse map recovers coordinates and octant"""
    p = EllipticPoint(u=u, signs=signs)
    back = to_elliptic(AXES, to_cartesian(AXES, p))
    assert back.signs == signs
    assert np.allclose(back.u, u, rtol=1e-9, atol=1e-9)


def test_to_elliptic_on_ellipsoid():
    """Test that a point of the ellipsoid u = 0 has u3 = 0"""
    x = np.array([1.0, 0.8, np.sqrt(1.0 - 1.0 / 3.0 - 0.32)])
    assert to_elliptic(AXES, x).u[2] == pytest.approx(0.0, abs=1e-12)


def test_to_elliptic_coordinate_plane():
    with pytest.raises(CoordinatePlaneError):
        to_elliptic(AXES, (1.0, 0.0, 0.5))


def test_identity_residual(rng):
    """Test the partial fraction identity at random values of u"""
    p = EllipticPoint(u=(2.3, 1.2, -0.7))
    values = rng.uniform(-5.0, 5.0, size=16)
    assert identity_residual(AXES, p, values) < 1e-10


@pytest.mark.parametrize("k", [0, 1, 2])
def test_metric_finite_difference(k):
    """Test each metric coefficient against a central difference"""
    u = np.array([2.4, 1.6, -0.3])
    delta = 1e-6
    step = np.zeros(3)
    step[k] = delta
    plus = to_cartesian(AXES, EllipticPoint(u=tuple(u + step)))
    minus = to_cartesian(AXES, EllipticPoint(u=tuple(u - step)))
    estimate = np.sum((plus - minus) ** 2) / (2 * delta) ** 2
    assert metric_coeffs(AXES, EllipticPoint(u=tuple(u)))[k] == pytest.approx(estimate, rel=1e-5)


def test_metric_positive(rng):
    for _ in range(1000):
        u = (rng.uniform(2.0, 3.0), rng.uniform(1.0, 2.0), rng.uniform(-10.0, 1.0))
        assert np.all(metric_coeffs(AXES, EllipticPoint(u=u)) > 0)


def test_metric_pole_rate():
    """Test that h1^2 grows like 1 / (a1 - u1)"""
    h = [metric_coeffs(AXES, EllipticPoint(u=(3.0 - eps, 1.5, 0.0)))[0] * eps for eps in (1e-4, 1e-6)]
    assert h[0] == pytest.approx(h[1], rel=1e-3)


def test_focal_ellipse_vertex():
    """Test that u1 = a2 on the focal ellipse chart gives its vertex"""
    x = boundary_chart(AXES, ChartKind.FOCAL_ELLIPSE, (2.0,))
    assert x == pytest.approx([np.sqrt(2.0), 0.0, 0.0], abs=1e-12)


def test_focal_conic_membership():
    for which, free in ((ChartKind.FOCAL_ELLIPSE, (2.6,)), (ChartKind.FOCAL_HYPERBOLA, (-0.4,))):
        x = boundary_chart(AXES, which, free)
        assert chart_membership(AXES, which, x) < 1e-10


def test_plane_chart_inside_focal_ellipse():
    """Test that u3 = a3 lands on x3 = 0 inside the focal ellipse"""
    x = boundary_chart(AXES, "u3_to_a3", (2.5, 1.5))
    assert chart_membership(AXES, ChartKind.U3_TO_A3, x) < 1e-12
    assert x[0] ** 2 / 2.0 + x[1] ** 2 / 1.0 <= 1.0


def test_chart_continuity():
    """Test that interior points approach the chart point"""
    chart = boundary_chart(AXES, BoundaryChart(which=ChartKind.U3_TO_A3, free=(2.5, 1.5)))
    near = to_cartesian(AXES, EllipticPoint(u=(2.5, 1.5, 1.0 - 1e-8)))
    assert np.linalg.norm(near - chart) < 1e-3


@pytest.mark.parametrize("which", [kind for kind in ChartKind if kind not in (ChartKind.FOCAL_ELLIPSE, ChartKind.FOCAL_HYPERBOLA)])
def test_plane_charts_lie_on_planes(which):
    free = {"u1": 2.5, "u2": 1.5, "u3": 0.0}
    names = {
        ChartKind.U1_TO_A1: ("u2", "u3"),
        ChartKind.U1_TO_A2: ("u2", "u3"),
        ChartKind.U2_TO_A2: ("u1", "u3"),
        ChartKind.U2_TO_A3: ("u1", "u3"),
        ChartKind.U3_TO_A3: ("u1", "u2"),
    }[which]
    x = boundary_chart(AXES, which, tuple(free[n] for n in names))
    assert chart_membership(AXES, which, x) < 1e-12


def test_chart_range():
    with pytest.raises(RangeError):
        boundary_chart(AXES, ChartKind.FOCAL_ELLIPSE, (1.5,))
    with pytest.raises(RangeError):
        boundary_chart(AXES, ChartKind.U3_TO_A3, (2.5,))
