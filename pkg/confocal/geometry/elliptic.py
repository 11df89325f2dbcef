"""
Elliptic coordinates on R^3: forward and inverse maps, metric coefficients
and the degenerate boundary charts.
"""

from typing import Sequence, Tuple, Union

import numpy as np
import structlog

from confocal.config import settings
from confocal.errors import CoordinatePlaneError, RangeError
from confocal.geometry.core import confocal_parameters
from confocal.schemas.geometry import BoundaryChart, ChartKind, ConfocalFamily, EllipticPoint

logger = structlog.get_logger()

Axes = Tuple[float, float, float]


def squared_coordinates(axes: Axes, u: Sequence[float]) -> np.ndarray:
    """(x^j)^2 = prod_k (a_j - u^k) / prod_{l != j} (a_j - a_l)"""
    a = np.asarray(axes, dtype=float)
    u = np.asarray(u, dtype=float)
    out = np.empty(3)
    for j in range(3):
        num = np.prod(a[j] - u)
        den = np.prod(a[j] - np.delete(a, j))
        out[j] = num / den
    return out


def to_cartesian(axes: Axes, p: EllipticPoint) -> np.ndarray:
    p.check_interlacing(axes)
    sq = squared_coordinates(axes, p.u)
    return np.asarray(p.signs, dtype=float) * np.sqrt(np.maximum(sq, 0.0))


def to_elliptic(axes: Axes, x) -> EllipticPoint:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) <= settings.eps_sep):
        raise CoordinatePlaneError("point lies on a coordinate plane", x=x)
    u = confocal_parameters(ConfocalFamily(axes=tuple(axes)), x)
    a = np.asarray(axes, dtype=float)
    gaps = np.abs(np.subtract.outer(u, a))
    if np.min(gaps) <= settings.root_merge_tol:
        logger.warning("elliptic_near_boundary", x=x.tolist(), u=u.tolist())
    signs = tuple(int(s) for s in np.sign(x))
    p = EllipticPoint(u=tuple(float(v) for v in u), signs=signs)
    p.check_interlacing(axes, eps=0.0)
    return p


def metric_coeffs(axes: Axes, p: EllipticPoint) -> np.ndarray:
    """(h_1^2, h_2^2, h_3^2) of ds^2 = sum h_k^2 (du^k)^2"""
    p.check_interlacing(axes)
    a = np.asarray(axes, dtype=float)
    u = np.asarray(p.u, dtype=float)
    h2 = np.empty(3)
    for k in range(3):
        h2[k] = np.prod(u[k] - np.delete(u, k)) / (4.0 * np.prod(a - u[k]))
    return h2


def identity_residual(axes: Axes, p: EllipticPoint, values) -> float:
    """Largest relative defect of sum x^2/(a-u) - 1 = prod(u-u^j)/prod(a-u) at the given values"""
    x = to_cartesian(axes, p)
    a = np.asarray(axes, dtype=float)
    worst = 0.0
    for v in np.asarray(values, dtype=float):
        lhs = np.sum(x * x / (a - v)) - 1.0
        rhs = np.prod(v - np.asarray(p.u)) / np.prod(a - v)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    return worst


# Free coordinates and the coordinate plane (or conic) of each chart
_CHART_FREE = {
    ChartKind.U1_TO_A1: ("u2", "u3"),
    ChartKind.U1_TO_A2: ("u2", "u3"),
    ChartKind.U2_TO_A2: ("u1", "u3"),
    ChartKind.U2_TO_A3: ("u1", "u3"),
    ChartKind.U3_TO_A3: ("u1", "u2"),
    ChartKind.FOCAL_ELLIPSE: ("u1",),
    ChartKind.FOCAL_HYPERBOLA: ("u3",),
}


def _check_range(axes: Axes, name: str, value: float) -> None:
    a1, a2, a3 = axes
    lo, hi = {"u1": (a2, a1), "u2": (a3, a2), "u3": (-np.inf, a3)}[name]
    slack = settings.eps_sep * max(1.0, abs(value))
    if not (lo - slack <= value <= hi + slack):
        raise RangeError(f"{name} out of range for chart", value=value, low=lo, high=hi)


def boundary_chart(
    axes: Axes,
    which: Union[ChartKind, str, BoundaryChart],
    free: Sequence[float] = (),
    signs: Sequence[int] = (1, 1, 1),
) -> np.ndarray:
    """Limit point of elliptic coordinates on a coordinate plane or focal conic"""
    if isinstance(which, BoundaryChart):
        free, signs, which = which.free, which.signs, which.which
    which = ChartKind(which)
    names = _CHART_FREE[which]
    if len(free) != len(names):
        raise RangeError(f"chart {which.value} takes {len(names)} free coordinates", free=list(free))
    for name, value in zip(names, free):
        _check_range(axes, name, value)

    a = np.asarray(axes, dtype=float)
    values = dict(zip(names, free))
    if which is ChartKind.FOCAL_ELLIPSE:
        plane, remaining = 2, (values["u1"], a[2])
    elif which is ChartKind.FOCAL_HYPERBOLA:
        plane, remaining = 1, (a[1], values["u3"])
    else:
        plane = {
            ChartKind.U1_TO_A1: 0,
            ChartKind.U1_TO_A2: 1,
            ChartKind.U2_TO_A2: 1,
            ChartKind.U2_TO_A3: 2,
            ChartKind.U3_TO_A3: 2,
        }[which]
        remaining = tuple(values[name] for name in names)

    # the pinned factor a_p - u^k cancels against a_j - a_p
    sq = np.zeros(3)
    for j in range(3):
        if j == plane:
            continue
        others = [a[l] for l in range(3) if l not in (j, plane)]
        sq[j] = np.prod(a[j] - np.asarray(remaining)) / np.prod(a[j] - np.asarray(others))
    return np.asarray(signs, dtype=float) * np.sqrt(np.maximum(sq, 0.0))


def chart_membership(axes: Axes, which: Union[ChartKind, str], x) -> float:
    """Residual of the plane or focal-conic equation satisfied by a chart point"""
    which = ChartKind(which)
    a1, a2, a3 = axes
    x1, x2, x3 = np.asarray(x, dtype=float)
    if which is ChartKind.FOCAL_ELLIPSE:
        return abs(x1 ** 2 / (a1 - a3) + x2 ** 2 / (a2 - a3) - 1.0) + abs(x3)
    if which is ChartKind.FOCAL_HYPERBOLA:
        return abs(x1 ** 2 / (a1 - a2) + x3 ** 2 / (a3 - a2) - 1.0) + abs(x2)
    plane = {
        ChartKind.U1_TO_A1: 0,
        ChartKind.U1_TO_A2: 1,
        ChartKind.U2_TO_A2: 1,
        ChartKind.U2_TO_A3: 2,
        ChartKind.U3_TO_A3: 2,
    }[which]
    return abs((x1, x2, x3)[plane])
