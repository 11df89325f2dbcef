"""
Threads: the planar string construction about an ellipse, the closed
thread stretched by a pen around an ellipsoid and a hyperboloid, and the
length of mixed threads with prescribed curvature pieces.
"""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict
from scipy import optimize

from confocal.errors import (
    ClosureResidualError,
    ConfocalError,
    InfeasibleThreadError,
)
from confocal.geometry.billiards import reflection_residual, tangent_lines_from_point
from confocal.geometry.core import confocal_parameters, line_coefficients
from confocal.geometry.elliptic import to_cartesian
from confocal.geometry.geodesics import (
    HALF_PI,
    angle_state,
    curvature_arc_length,
    curvature_line_point,
    geodesic_to_branch,
    phase_measure,
)
from confocal.geometry.quadrature import (
    J2,
    critical_pen_parameter,
    hyperelliptic,
    integrate_smooth,
    monic,
    winding_sum,
)
from confocal.schemas.geometry import (
    CharacteristicRadical,
    ConfocalFamily,
    EllipticPoint,
    GravesVertex,
    Line,
    Segment,
    StaudeThread,
    WindingCounts,
)

logger = structlog.get_logger()

TWO_PI = 2.0 * np.pi

# n, n_prime, m of the thread that wraps each quadric once per side
T1_COUNTS = {"n": 2, "n_prime": 2, "m": 1}


# Planar string construction

def graves_vertex(a1: float, a2: float, z: float, theta0: float) -> GravesVertex:
    """Contact angles of the two tangents from the vertex of angle theta0 on the ellipse z.

    The contact points (sqrt(a1) cos t, sqrt(a2) sin t) solve
    A cos t + B sin t = 1 with A = cos(theta0) sqrt(1 - z/a1) and
    B = sin(theta0) sqrt(1 - z/a2).
    """
    if z >= 0:
        raise ValueError("vertex ellipse needs z < 0")
    A = np.cos(theta0) * np.sqrt(1.0 - z / a1)
    B = np.sin(theta0) * np.sqrt(1.0 - z / a2)
    r2 = A * A + B * B
    root = np.sqrt(r2 - 1.0)
    angles = []
    for j in (1, 2):
        sign = (-1.0) ** j
        cos_t = (A - sign * B * root) / r2
        sin_t = (B + sign * A * root) / r2
        angles.append(float(np.arctan2(sin_t, cos_t)))
    theta1 = theta0 - (theta0 - angles[0]) % TWO_PI
    theta2 = theta0 + (angles[1] - theta0) % TWO_PI
    return GravesVertex(a1=a1, a2=a2, z=z, theta0=theta0, theta1=theta1, theta2=theta2)


def tangency_residuals(vertex: GravesVertex) -> Tuple[float, float]:
    """Defect of A cos t + B sin t = 1 at both contact angles"""
    A = np.cos(vertex.theta0) * np.sqrt(1.0 - vertex.z / vertex.a1)
    B = np.sin(vertex.theta0) * np.sqrt(1.0 - vertex.z / vertex.a2)
    return tuple(abs(A * np.cos(t) + B * np.sin(t) - 1.0) for t in (vertex.theta1, vertex.theta2))


def ellipse_arc_length(a1: float, a2: float, theta_a: float, theta_b: float) -> float:
    def f(t):
        return np.sqrt(a1 * np.sin(t) ** 2 + a2 * np.cos(t) ** 2)[None, :]

    return abs(float(integrate_smooth(f, theta_a, theta_b)[0]))


def graves_excess(a1: float, a2: float, z: float, theta0: float) -> float:
    """Chord between the Ivory images of the contacts minus the arc between the contacts"""
    vertex = graves_vertex(a1, a2, z, theta0)
    p1 = vertex.point(vertex.theta1, z)
    p2 = vertex.point(vertex.theta2, z)
    return float(np.linalg.norm(p1 - p2)) - ellipse_arc_length(a1, a2, vertex.theta1, vertex.theta2)


def graves_tangent_length(vertex: GravesVertex) -> float:
    x = vertex.vertex
    c1, c2 = vertex.contacts
    return float(np.linalg.norm(x - c1) + np.linalg.norm(x - c2))


def graves_reflection(vertex: GravesVertex) -> Tuple[float, float]:
    """Reflection residuals at the vertex on Q_z and at the Ivory-transported vertex on Q_0"""
    family = ConfocalFamily(axes=(vertex.a1, vertex.a2))
    c1, c2 = vertex.contacts
    at_z = reflection_residual(family, vertex.z, vertex.vertex, c1, c2)
    back = vertex.point(vertex.theta0, 0.0)
    at_0 = reflection_residual(
        family, 0.0, back, vertex.point(vertex.theta1, vertex.z), vertex.point(vertex.theta2, vertex.z)
    )
    return at_z, at_0


# Staude threads

class _PenSide(BaseModel):
    """Both pen-side halves of a candidate thread"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sigma: int
    pieces_a: Tuple[Segment, Segment]
    pieces_b: Tuple[Segment, Segment]
    phi1_a: float
    phi1_b: float
    branch_a: float
    branch_b: float
    advance: float


def _ahead_to_caustic(family: ConfocalFamily, u3_0: float, line: Line) -> Tuple[Line, float]:
    alpha, beta, _ = line_coefficients(family, u3_0, line)
    t = -beta / alpha
    if t < 0:
        line = Line.through(line.p, -line.d)
        t = -t
    return line, t


def _pen_side(
    rad: CharacteristicRadical,
    pen: np.ndarray,
    azimuth: float,
    line_a: Line,
    t_a: float,
    line_b: Line,
    t_b: float,
) -> Optional[_PenSide]:
    family = ConfocalFamily(axes=rad.axes)
    touch_a, touch_b = line_a.at(t_a), line_b.at(t_b)
    state_a = angle_state(rad, touch_a, line_a.d)
    state_b = angle_state(rad, touch_b, -line_b.d)
    if state_a.sigma1 != state_b.sigma1:
        return None
    sigma = state_a.sigma1

    branch_a = HALF_PI + np.ceil((state_a.phi2 - HALF_PI) / np.pi) * np.pi
    branch_b = HALF_PI + np.floor((state_b.phi2 - HALF_PI) / np.pi) * np.pi
    if abs((branch_b - branch_a) % TWO_PI - np.pi) > 1e-9:
        return None

    crossings = 0
    for touch, t_touch, line in ((touch_a, t_a, line_a), (touch_b, t_b, line_b)):
        alpha, beta, _ = line_coefficients(family, rad.u2_0, line)
        if 0.0 < -beta / alpha < t_touch:
            return None
        crossings += int(pen[2] * touch[2] < 0)
    for lo, hi in ((state_a.phi2, branch_a), (branch_b, state_b.phi2)):
        crossings += int(np.floor(hi / np.pi) - np.floor(lo / np.pi))
    if crossings != 1:
        return None

    phi1_a, len_a, pts_a = geodesic_to_branch(rad, state_a.phi1, state_a.phi2, sigma, branch_a)
    phi1_b, len_b, pts_b = geodesic_to_branch(rad, state_b.phi1, state_b.phi2, sigma, branch_b)
    advance = (
        (sigma * (state_a.phi1 - azimuth)) % TWO_PI
        + sigma * (phi1_a - state_a.phi1)
        + sigma * (state_b.phi1 - phi1_b)
        + (sigma * (azimuth - state_b.phi1)) % TWO_PI
    )
    pen_t = tuple(pen)
    return _PenSide(
        sigma=sigma,
        pieces_a=(
            Segment(kind="rectilinear", points=(pen_t, tuple(touch_a)), length=t_a, tangencies=(tuple(touch_a),)),
            Segment(kind="geodesic", points=tuple(map(tuple, pts_a)), length=len_a),
        ),
        pieces_b=(
            Segment(kind="geodesic", points=tuple(map(tuple, pts_b[::-1])), length=len_b),
            Segment(kind="rectilinear", points=(tuple(touch_b), pen_t), length=t_b, tangencies=(tuple(touch_b),)),
        ),
        phi1_a=phi1_a,
        phi1_b=phi1_b,
        branch_a=float(branch_a),
        branch_b=float(branch_b),
        advance=float(advance),
    )


def _phase_span(rad: CharacteristicRadical, start: float, sigma: int, weight: float, limit: float) -> float:
    """phi1 advance from start whose weighted sweep equals weight"""
    if weight <= 0:
        return 0.0
    g = lambda t: abs(phase_measure(rad, start, start + sigma * t)) - weight
    return float(optimize.brentq(g, 0.0, limit, xtol=1e-14, rtol=1e-14))


def _arc(rad: CharacteristicRadical, phi_a: float, phi_b: float, branch: float) -> Segment:
    ts = np.linspace(phi_a, phi_b, 33)
    pts = curvature_line_point(rad, ts, int(round(np.sin(branch))))
    return Segment(kind="curvature", points=tuple(map(tuple, pts)), length=curvature_arc_length(rad, phi_a, phi_b))


def pen_point(rad: CharacteristicRadical, u3_1: float, azimuth: float, pen_u2: Optional[float] = None) -> np.ndarray:
    """Pen on the ellipsoid u3_1 with first angle variable azimuth and x3 > 0"""
    a1, a2, a3 = rad.axes
    pen_u2 = 0.5 * (a3 + rad.u2_0) if pen_u2 is None else pen_u2
    u1 = a2 + (a1 - a2) * np.sin(azimuth) ** 2
    signs = (1 if np.cos(azimuth) >= 0 else -1, 1 if np.sin(azimuth) >= 0 else -1, 1)
    return to_cartesian(rad.axes, EllipticPoint(u=(u1, pen_u2, u3_1), signs=signs))


def _cyclic_runs(mask: np.ndarray) -> int:
    if mask.all():
        return 1
    starts = mask & ~np.roll(mask, 1)
    return int(np.count_nonzero(starts))


def thread_counts(rad: CharacteristicRadical, polyline, tol: float = 1e-8) -> Dict[str, int]:
    """Winding counts measured on a closed polyline.

    n: sign changes of x2 around the loop. n_prime: stretches lying on the
    hyperboloid u2_0. m: stretches off the ellipsoid u3_0.
    """
    pts = np.asarray(polyline, dtype=float)
    family = ConfocalFamily(axes=rad.axes)
    u = np.array([confocal_parameters(family, x) for x in pts])

    x2 = np.sign(pts[:, 1])
    x2 = x2[x2 != 0]
    n = int(np.count_nonzero(x2 != np.roll(x2, 1))) if x2.size else 0
    on_hyperboloid = np.abs(u[:, 1] - rad.u2_0) <= tol * max(1.0, abs(rad.u2_0))
    off_ellipsoid = u[:, 2] < rad.u3_0 - tol * max(1.0, abs(rad.u3_0))
    return {"n": n, "n_prime": _cyclic_runs(on_hyperboloid), "m": _cyclic_runs(off_ellipsoid)}


def assemble_staude_thread(
    axes,
    u2_0: float,
    u3_0: float,
    u3_1: float,
    azimuth: float,
    pen_u2: Optional[float] = None,
    split: float = 0.5,
) -> StaudeThread:
    """Closed thread around the ellipsoid u3_0 and hyperboloid u2_0 stretched by a pen on u3_1.

    Pieces in order: line, geodesic, curvature arc, geodesic, curvature arc,
    geodesic, line. The curvature budget is shared between the two arcs in
    the ratio split : 1 - split.
    """
    rad = CharacteristicRadical(axes=tuple(axes), u2_0=u2_0, u3_0=u3_0)
    if u3_1 >= u3_0:
        raise InfeasibleThreadError("pen must lie outside the caustic ellipsoid", regime="never", u3_1=u3_1)
    family = ConfocalFamily(axes=rad.axes)
    pen = pen_point(rad, u3_1, azimuth, pen_u2)

    oriented = [_ahead_to_caustic(family, u3_0, line) for line in tangent_lines_from_point(axes, pen, u2_0, u3_0)]
    plans = []
    for i, (line_a, t_a) in enumerate(oriented):
        for j, (line_b, t_b) in enumerate(oriented):
            if i == j:
                continue
            if reflection_residual(family, u3_1, pen, line_a.at(t_a), line_b.at(t_b)) > 1e-8:
                continue
            try:
                plan = _pen_side(rad, pen, azimuth, line_a, t_a, line_b, t_b)
            except ConfocalError as exc:
                logger.debug("pen_side_rejected", error=exc.message)
                continue
            if plan is not None and plan.advance < TWO_PI:
                plans.append(plan)
    if not plans:
        raise InfeasibleThreadError(
            "no pair of pen tangents closes around the ellipsoid",
            regime=critical_pen_parameter(rad).regime,
            azimuth=azimuth,
        )
    plan = sorted(plans, key=lambda p: -p.sigma)[0]
    sigma = plan.sigma

    middle = TWO_PI - plan.advance
    sweep_j2 = J2(rad, monic(u3_0))
    budget = abs(phase_measure(rad, plan.phi1_a, plan.phi1_a + sigma * middle)) - 2.0 * sweep_j2
    scale = max(1.0, sweep_j2)
    if budget < -1e-9 * scale:
        raise InfeasibleThreadError(
            "negative curvature budget for this pen",
            regime=critical_pen_parameter(rad).regime,
            budget=budget,
        )
    budget = max(budget, 0.0)

    first = _phase_span(rad, plan.phi1_a, sigma, split * budget, middle)
    phi_c1 = plan.phi1_a + sigma * first
    phi_mid, len_mid, pts_mid = geodesic_to_branch(rad, phi_c1, plan.branch_a, sigma, plan.branch_a + np.pi)
    target = plan.phi1_a + sigma * middle
    rest = sigma * (target - phi_mid)
    residual = abs(abs(phase_measure(rad, phi_mid, target)) - (1.0 - split) * budget) if rest > 0 else abs(rest)
    if rest < -1e-7 or residual > 1e-6 * scale:
        raise ClosureResidualError("middle geodesic misses the second curvature branch", residual=residual, rest=rest)

    pieces = (
        *plan.pieces_a,
        _arc(rad, plan.phi1_a, phi_c1, plan.branch_a),
        Segment(kind="geodesic", points=tuple(map(tuple, pts_mid)), length=len_mid),
        _arc(rad, phi_mid, target, plan.branch_a + np.pi),
        *plan.pieces_b,
    )
    total = 0.0
    for piece in pieces:
        total += piece.length

    polyline = np.concatenate([np.asarray(p.points) for p in pieces])
    counts = thread_counts(rad, polyline)
    if counts != T1_COUNTS:
        raise ClosureResidualError(
            "assembled thread winds differently from its topology",
            counts=counts,
            expected=T1_COUNTS,
            azimuth=azimuth,
        )
    logger.info("staude_thread_assembled", azimuth=azimuth, length=total, budget=budget, u3_1=u3_1)
    return StaudeThread(
        rad=rad,
        u3_1=u3_1,
        pen=tuple(float(v) for v in pen),
        pieces=pieces,
        total_length=total,
        topology="T1",
        curvature_budget=budget,
        counts=counts,
    )


# Mixed threads

class CurvatureBudget(BaseModel):
    """Prescribed line of curvature piece, as a range of u1; cusped pieces count negatively"""
    model_config = ConfigDict(frozen=True)

    u1_from: float
    u1_to: float
    cusped: bool = False


def curvature_weight(rad: CharacteristicRadical, piece: CurvatureBudget) -> float:
    """Signed weighted u1-sweep of a curvature piece"""
    lo, hi = sorted((piece.u1_from, piece.u1_to))
    weight = hyperelliptic(rad, monic(rad.u3_0), lo, hi)
    return -weight if piece.cusped else weight


def absorbed_weight(
    rad: CharacteristicRadical,
    u3_1: float,
    w: WindingCounts,
    budgets: Sequence[CurvatureBudget] = (),
    tol: float = 1e-9,
) -> float:
    """Weighted sweep left to the last curvature piece once the prescribed ones are placed.

    Counts follow the vertex convention: m is the number of pen or billiard
    vertices, each contributing two rectilinear sweeps of u3.
    """
    residual = 2.0 * winding_sum(rad, monic(rad.u3_0), u3_1, w.n, w.n_prime, w.m)
    if not budgets:
        if abs(residual) > tol:
            raise ClosureResidualError("closure residual without curvature pieces", residual=residual)
        return 0.0
    prescribed = sum(curvature_weight(rad, piece) for piece in budgets[:-1])
    last = residual - prescribed
    if last < -tol and not budgets[-1].cusped:
        raise ClosureResidualError("last curvature piece would need a cusp", residual=residual, absorbed=last)
    return last


def mixed_thread_length(
    rad: CharacteristicRadical,
    u3_1: float,
    w: WindingCounts,
    budgets: Sequence[CurvatureBudget] = (),
    tol: float = 1e-9,
) -> float:
    """Length of a closed thread of rectilinear, geodesic and curvature pieces"""
    absorbed = absorbed_weight(rad, u3_1, w, budgets, tol)
    length = winding_sum(rad, monic(rad.u2_0, rad.u3_0), u3_1, w.n, w.n_prime, w.m)
    logger.debug("mixed_thread_length", length=length, absorbed=absorbed, pieces=len(budgets))
    return length
