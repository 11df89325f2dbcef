"""
Billiard polygons whose sides are tangent to fixed confocal quadrics:
planar polygons circumscribed about an ellipse with vertices on confocal
ellipses, and spatial polygons tangent to an ellipsoid and a one-sheeted
hyperboloid with vertices on a confocal ellipsoid.
"""

from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import optimize

from confocal.config import settings
from confocal.errors import (
    ConeDegeneracyError,
    HypothesisError,
    NoRealTangentError,
    NotFound,
)
from confocal.geometry.core import (
    confocal_parameters,
    intersect_line_quadric,
    ivory_affinity,
    line_coefficients,
    normal_hat,
    principal_frame,
    reflect,
    tangency_spectrum,
)
from confocal.geometry.quadrature import ONE, U, hyperelliptic, hyperelliptic_batch
from confocal.schemas.geometry import (
    CharacteristicRadical,
    ConfocalFamily,
    Line,
    PlanarRadical,
    PolygonalThread,
    Segment,
    Vertex,
)

logger = structlog.get_logger()


def tangent_lines_from_point(axes, x, z1: float, z2: Optional[float] = None) -> List[Line]:
    """Lines through x tangent to Q_{z1} (and Q_{z2} in space).

    In the frame of unit normals of the confocal quadrics through x a
    direction v = sum c_k n_k touches Q_lam exactly when
    sum c_k^2 / (u^k - lam) = 0, so the directions tangent to the given
    quadrics have c_k^2 = prod_i (u^k - z_i) / prod_{j != k} (u^k - u^j).
    """
    family = ConfocalFamily(axes=tuple(axes))
    x = np.asarray(x, dtype=float)
    targets = [z1] if z2 is None else [z1, z2]
    if len(targets) != family.dim - 1:
        raise ValueError(f"dimension {family.dim} needs {family.dim - 1} tangent quadrics")
    if z2 is not None and abs(z1 - z2) <= settings.eps_sep:
        raise ConeDegeneracyError("tangent cones coincide", z=z1)

    u, normals = principal_frame(family, x)
    if np.min(np.abs(np.diff(u))) <= settings.root_merge_tol * max(1.0, float(np.max(np.abs(u)))):
        raise ConeDegeneracyError("point lies on a focal conic", x=x, u=u)

    c2 = np.empty(family.dim)
    for k in range(family.dim):
        num = np.prod([u[k] - z for z in targets])
        den = np.prod(u[k] - np.delete(u, k))
        c2[k] = num / den
    scale = max(1.0, float(np.max(np.abs(c2))))
    if np.any(c2 < -1e-12 * scale):
        raise NoRealTangentError("point is inside one of the tangent quadrics", x=x, u=u, targets=targets)
    c = np.sqrt(np.maximum(c2, 0.0))

    lines = []
    seen = []
    for signs in product((1.0, -1.0), repeat=family.dim - 1):
        v = normals.T @ (c * np.array([1.0, *signs]))
        v /= np.linalg.norm(v)
        if any(abs(abs(v @ w) - 1.0) < 1e-12 for w in seen):
            continue
        seen.append(v)
        lines.append(Line.through(x, v))
    return lines


def reflection_residual(family: ConfocalFamily, z: float, vertex, previous, following) -> float:
    """Tangential part of the sum of the unit chords leaving a vertex"""
    vertex = np.asarray(vertex, dtype=float)
    normal = normal_hat(family, z, vertex)
    normal = normal / np.linalg.norm(normal)
    back = np.asarray(previous, dtype=float) - vertex
    ahead = np.asarray(following, dtype=float) - vertex
    total = back / np.linalg.norm(back) + ahead / np.linalg.norm(ahead)
    return float(np.linalg.norm(total - (total @ normal) * normal))


def _far_intersection(family: ConfocalFamily, z: float, line: Line) -> Tuple[float, np.ndarray]:
    hits = intersect_line_quadric(family, z, line)
    if not hits:
        raise NoRealTangentError("chord misses the vertex quadric", z=z, base=line.base)
    t, point = max(hits, key=lambda h: h[0])
    if t <= settings.eps_sep:
        raise NoRealTangentError("chord does not reach the vertex quadric ahead", z=z, t=t)
    return t, point


def _tangency_point(family: ConfocalFamily, z: float, line: Line) -> Tuple[float, np.ndarray]:
    alpha, beta, _ = line_coefficients(family, z, line)
    t = -beta / alpha
    return t, line.at(t)


def reflect_in_quadric(family: ConfocalFamily, z: float, line: Line) -> Tuple[np.ndarray, Line]:
    """Follow a line forward to Q_z and reflect it there"""
    _, vertex = _far_intersection(family, z, line)
    out = reflect(line.d, normal_hat(family, z, vertex))
    return vertex, Line.through(vertex, out)


# Spatial polygons

def _snap(axes, vertex, u2_0: float, u3_0: float, guess: np.ndarray) -> Tuple[np.ndarray, float]:
    best, drift = guess, np.inf
    for cand in tangent_lines_from_point(axes, vertex, u2_0, u3_0):
        d = cand.d if cand.d @ guess >= 0 else -cand.d
        gap = float(np.linalg.norm(d - guess))
        if gap < drift:
            best, drift = d, gap
    return best, drift


def _chord_events(line: Line, length: float, u2_0: float, family: ConfocalFamily) -> Dict[str, int]:
    start, end = line.p, line.at(length)
    counts = {"x1": 0, "x2": 0, "hyperboloid": 0}
    if start[0] * end[0] < 0:
        counts["x1"] = 1
    if start[1] * end[1] < 0:
        counts["x2"] = 1
    t_h, _ = _tangency_point(family, u2_0, line)
    if 0.0 < t_h < length:
        counts["hyperboloid"] = 1
    return counts


def build_polygon(
    axes,
    start,
    u2_0: float,
    u3_0: float,
    steps: int,
    branch: int = 0,
) -> PolygonalThread:
    """Billiard in the ellipsoid through start, sides tangent to Q_{u2_0} and Q_{u3_0}"""
    family = ConfocalFamily(axes=tuple(axes))
    x = np.asarray(start, dtype=float)
    u3_1 = float(confocal_parameters(family, x)[-1])
    if u3_1 >= u3_0:
        raise HypothesisError("start must lie outside the caustic ellipsoid", u3_1=u3_1, u3_0=u3_0)

    candidates = tangent_lines_from_point(axes, x, u2_0, u3_0)
    direction = candidates[branch % len(candidates)].d
    hits = intersect_line_quadric(family, u3_1, Line.through(x, direction))
    if hits and max(hits, key=lambda h: abs(h[0]))[0] < 0:
        direction = -direction

    vertices = [Vertex(point=tuple(x), z=u3_1)]
    segments = []
    totals = {"x1": 0, "x2": 0, "hyperboloid": 0}
    returns = []
    drift = 0.0
    diameter = 2.0 * np.sqrt(family.a[0] - u3_1)
    for step in range(steps):
        line = Line.through(x, direction)
        t, nxt = _far_intersection(family, u3_1, line)
        _, touch_e = _tangency_point(family, u3_0, line)
        _, touch_h = _tangency_point(family, u2_0, line)
        for key, value in _chord_events(line, t, u2_0, family).items():
            totals[key] += value
        segments.append(
            Segment(
                kind="rectilinear",
                points=(tuple(x), tuple(nxt)),
                length=float(t),
                tangencies=(tuple(touch_e), tuple(touch_h)),
            )
        )
        reflected = reflect(direction, normal_hat(family, u3_1, nxt))
        direction, gap = _snap(axes, nxt, u2_0, u3_0, reflected)
        drift = max(drift, gap)
        x = nxt
        vertices.append(Vertex(point=tuple(x), z=u3_1))
        returns.append(float(np.linalg.norm(x - np.asarray(start, dtype=float))))

    tol = 1e-6 * diameter
    gap = returns[-1]
    early = [k + 1 for k in range(steps - 1) if steps % (k + 1) == 0 and returns[k] < tol]
    closed = gap < tol and not early
    counts = {"n": totals["x2"], "n_x1": totals["x1"], "n_prime": totals["hyperboloid"], "m": steps}
    perimeter = float(sum(s.length for s in segments))
    logger.debug("polygon_built", steps=steps, gap=gap, closed=closed, perimeter=perimeter, snap_drift=drift)
    return PolygonalThread(
        vertices=tuple(vertices[:-1]) if closed else tuple(vertices),
        segments=tuple(segments),
        closed=closed,
        closure_gap=gap,
        perimeter=perimeter,
        caustics=(u3_0, u2_0),
        counts=counts,
    )


def chord_sweeps(rad: CharacteristicRadical, line: Line, t_a: float, t_b: float, polys: Sequence = (ONE, U)) -> np.ndarray:
    """Per-coordinate sweeps int |du^k| P(u^k) / sqrt(Delta) along a chord.

    Returns an array of shape (len(polys), 3). The chord is cut where a
    coordinate turns: plane crossings for u1 and u2, hyperboloid and
    ellipsoid contacts for u2 and u3.
    """
    family = ConfocalFamily(axes=rad.axes)
    a1, a2, a3 = rad.axes
    cuts = [t_a, t_b]
    p, d = line.p, line.d
    for j in range(3):
        if d[j] != 0:
            cuts.append(-p[j] / d[j])
    for z in (rad.u2_0, rad.u3_0):
        cuts.append(_tangency_point(family, z, line)[0])
    lo, hi = min(t_a, t_b), max(t_a, t_b)
    ts = sorted(t for t in cuts if lo <= t <= hi)

    bounds = [(a2, a1), (a3, rad.u2_0), (-np.inf, rad.u3_0)]
    coords = [np.clip(confocal_parameters(family, line.at(t)), [b[0] for b in bounds], [b[1] for b in bounds]) for t in ts]
    out = np.zeros((len(polys), 3))
    for left, right in zip(coords[:-1], coords[1:]):
        for k in range(3):
            u_lo, u_hi = sorted((left[k], right[k]))
            if u_hi - u_lo <= 0:
                continue
            out[:, k] += hyperelliptic_batch(rad, polys, u_lo, u_hi)
    return out


def sweep_identity(rad: CharacteristicRadical, thread: PolygonalThread, polys: Sequence = (ONE, U)) -> np.ndarray:
    """Sum over chords of S1 - S2 + S3 for each polynomial"""
    total = np.zeros(len(polys))
    for seg in thread.segments:
        start, end = (np.asarray(pt) for pt in seg.points)
        line = Line.through(start, end - start)
        sweeps = chord_sweeps(rad, line, 0.0, seg.length, polys)
        total += sweeps[:, 0] - sweeps[:, 1] + sweeps[:, 2]
    return total


# Planar polygons

def chasles_polygon_2d(axes2, zs: Sequence[float], theta: float, laps: int = 1) -> PolygonalThread:
    """Polygon tangent to the ellipse x^2/a1 + y^2/a2 = 1 reflecting on confocal ellipses.

    The first chord starts at the tangency point of angle theta; vertex j lies on
    the ellipse with parameter zs[j mod p]. One extra chord measures closure.
    """
    if any(z >= 0 for z in zs):
        raise HypothesisError("vertex ellipses must enclose the caustic", zs=list(zs))
    family = ConfocalFamily(axes=tuple(axes2))
    a1, a2 = axes2
    touch = np.array([np.sqrt(a1) * np.cos(theta), np.sqrt(a2) * np.sin(theta)])
    line = Line.through(touch, [-np.sqrt(a1) * np.sin(theta), np.sqrt(a2) * np.cos(theta)])

    p = len(zs)
    vertices = []
    for j in range(p * laps + 1):
        z = zs[j % p]
        vertex, line = reflect_in_quadric(family, z, line)
        vertices.append(Vertex(point=tuple(vertex), z=z))

    segments = []
    for left, right in zip(vertices[:-1], vertices[1:]):
        a, b = np.asarray(left.point), np.asarray(right.point)
        chord = Line.through(a, b - a)
        _, touch = _tangency_point(family, 0.0, chord)
        segments.append(
            Segment(
                kind="rectilinear",
                points=(left.point, right.point),
                length=float(np.linalg.norm(b - a)),
                tangencies=(tuple(touch),),
            )
        )
    gap = float(np.linalg.norm(np.asarray(vertices[-1].point) - np.asarray(vertices[0].point)))
    scale = 2.0 * np.sqrt(a1 - min(zs))
    return PolygonalThread(
        vertices=tuple(vertices[:-1]),
        segments=tuple(segments),
        closed=gap < 1e-6 * scale,
        closure_gap=gap,
        perimeter=float(sum(s.length for s in segments)),
        caustics=(0.0,),
    )


def poncelet_residual(axes2, z: float, n: int, m: int, poly=ONE) -> float:
    """n I1[P] - m J_z[P] with J_z over (z, 0)"""
    rad = PlanarRadical(axes=tuple(axes2), caustic=0.0)
    a1, a2 = axes2
    return n * hyperelliptic(rad, poly, a2, a1) - m * hyperelliptic(rad, poly, z, 0.0)


def poncelet_parameter(axes2, n: int = 2, m: int = 3) -> float:
    """Vertex ellipse z < 0 on which m-sided polygons about the unit-parameter caustic close.

    n counts the crossings of the minor axis and must be even.
    """
    a1, a2 = axes2
    lo = -1e-6 * a2
    hi = -a1
    f = lambda z: poncelet_residual(axes2, z, n, m)
    for _ in range(60):
        if np.sign(f(hi)) != np.sign(f(lo)):
            break
        hi *= 2.0
    else:
        raise NotFound("no Poncelet ellipse for these counts", n=n, m=m)
    z = optimize.brentq(f, hi, lo, xtol=1e-15, rtol=1e-15, maxiter=200)
    logger.debug("poncelet_parameter", n=n, m=m, z=z)
    return float(z)


def poncelet_perimeter(axes2, z: float, n: int = 2, m: int = 3) -> float:
    return poncelet_residual(axes2, z, n, m, poly=U)


# Dualization

def dualize_polygon(poly: PolygonalThread, axes, tol: float = 1e-6) -> PolygonalThread:
    """Swap the roles of vertices and contact points through the Ivory affinity.

    Planar polygons about a single caustic only. New vertices are the Ivory
    images of the contact points with the caustic; new contact points are the
    preimages of the old vertices. The result is closed when reflecting its
    first chord around the vertex ellipse returns to the first vertex, every
    vertex reflects, every chord touches the caustic and the perimeter is
    unchanged, all within tol.
    """
    if not poly.closed:
        raise HypothesisError("only closed polygons can be dualized", gap=poly.closure_gap)
    if len(axes) != 2 or len(poly.caustics) != 1:
        raise HypothesisError(
            "dualization needs a planar polygon about one caustic",
            axes=list(axes),
            caustics=list(poly.caustics),
        )
    family = ConfocalFamily(axes=tuple(axes))
    caustic = poly.caustics[0]
    z = poly.vertices[0].z
    if any(abs(v.z - z) > settings.eps_sep for v in poly.vertices):
        raise HypothesisError("dualization needs all vertices on one confocal quadric")

    old = poly.vertex_array()
    count = len(old)
    touches = [
        _tangency_point(family, caustic, Line.through(old[j], old[(j + 1) % count] - old[j]))[1]
        for j in range(count)
    ]
    new_vertices = [ivory_affinity(family, caustic, z, t) for t in touches]

    segments = []
    tangency_gap = 0.0
    for j in range(count):
        a, b = new_vertices[j], new_vertices[(j + 1) % count]
        chord = Line.through(a, b - a)
        spectrum = tangency_spectrum(family, chord)
        tangency_gap = max(tangency_gap, min((abs(tg.z - caustic) for tg in spectrum.values), default=np.inf))
        _, touch = _tangency_point(family, caustic, chord)
        segments.append(
            Segment(
                kind="rectilinear",
                points=(tuple(a), tuple(b)),
                length=float(np.linalg.norm(b - a)),
                tangencies=(tuple(touch),),
            )
        )

    line = Line.through(new_vertices[0], new_vertices[1] - new_vertices[0])
    for _ in range(count):
        end, line = reflect_in_quadric(family, z, line)
    gap = float(np.linalg.norm(end - new_vertices[0]))
    scale = 2.0 * np.sqrt(family.a[0] - z)

    perimeter = float(sum(s.length for s in segments))
    perimeter_gap = abs(perimeter - poly.perimeter) / poly.perimeter
    worst = max(
        reflection_residual(family, z, new_vertices[j], new_vertices[j - 1], new_vertices[(j + 1) % count])
        for j in range(count)
    )
    closed = gap < tol * scale and worst < tol and tangency_gap < tol * max(1.0, abs(caustic)) and perimeter_gap < tol
    log = logger.debug if closed else logger.warning
    log(
        "polygon_dualized",
        perimeter=perimeter,
        closure_gap=gap,
        reflection=worst,
        tangency_gap=tangency_gap,
        perimeter_gap=perimeter_gap,
    )
    return PolygonalThread(
        vertices=tuple(Vertex(point=tuple(v), z=z) for v in new_vertices),
        segments=tuple(segments),
        closed=closed,
        closure_gap=gap,
        perimeter=perimeter,
        caustics=poly.caustics,
        counts=poly.counts,
    )



def thread_reflection_residuals(poly: PolygonalThread, axes) -> List[float]:
    """Reflection residual at every vertex of a closed polygon"""
    family = ConfocalFamily(axes=tuple(axes))
    pts = poly.vertex_array()
    count = len(pts)
    return [
        reflection_residual(family, poly.vertices[j].z, pts[j], pts[j - 1], pts[(j + 1) % count])
        for j in range(count)
    ]
