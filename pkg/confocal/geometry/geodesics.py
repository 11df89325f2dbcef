"""
Geodesics on the ellipsoid u3 = u3_0 whose tangents touch the hyperboloid
u2 = u2_0.

The flow is integrated in angle variables

    u1 = a2 + (a1 - a2) sin^2(phi1),   u2 = a3 + (u2_0 - a3) sin^2(phi2)

in which turning points of u1, u2 become regular points: phi2 always
increases, phi1 moves in the direction sigma1, and coordinate-plane
crossings and hyperboloid contacts are phi crossings of multiples of pi/2.
"""

from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict
from scipy import optimize
from scipy.integrate import solve_ivp

from confocal.config import settings
from confocal.errors import StiffnessError
from confocal.geometry.core import confocal_parameters
from confocal.geometry.elliptic import metric_coeffs
from confocal.geometry.quadrature import (
    ClosureSolution,
    I1,
    J2,
    hyperelliptic,
    integrate_smooth,
    monic,
    solve_closure,
    sweep_integral,
)
from confocal.schemas.geometry import (
    CharacteristicRadical,
    ConfocalFamily,
    EllipticPoint,
    GeodesicState,
    WindingCounts,
)

logger = structlog.get_logger()

HALF_PI = 0.5 * np.pi


def angle_coordinates(rad: CharacteristicRadical, phi1, phi2) -> Tuple[np.ndarray, np.ndarray]:
    a1, a2, a3 = rad.axes
    u1 = a2 + (a1 - a2) * np.sin(phi1) ** 2
    u2 = a3 + (rad.u2_0 - a3) * np.sin(phi2) ** 2
    return u1, u2


def _amplitudes(rad: CharacteristicRadical, u1, u2):
    a1, a2, a3 = rad.axes
    u30 = rad.u3_0
    amp1 = np.sqrt((a1 - u2) * (a1 - u30) / (a1 - a3))
    amp2 = np.sqrt((a2 - u2) * (a2 - u30) / (a2 - a3))
    amp3 = np.sqrt((u1 - a3) * (rad.u2_0 - a3) * (a3 - u30) / ((a1 - a3) * (a2 - a3)))
    return amp1, amp2, amp3


def cartesian(rad: CharacteristicRadical, phi1, phi2) -> np.ndarray:
    """Point of the ellipsoid u3 = u3_0 at the given angle variables"""
    u1, u2 = angle_coordinates(rad, phi1, phi2)
    amp1, amp2, amp3 = _amplitudes(rad, u1, u2)
    return np.stack([np.cos(phi1) * amp1, np.sin(phi1) * amp2, np.sin(phi2) * amp3], axis=-1)


def angle_rates(rad: CharacteristicRadical, phi1, phi2) -> Tuple[np.ndarray, np.ndarray]:
    """|dphi1/ds| and dphi2/ds along the geodesic flow"""
    a1, a2, a3 = rad.axes
    u1, u2 = angle_coordinates(rad, phi1, phi2)
    u20, u30 = rad.u2_0, rad.u3_0
    gap = u1 - u2
    f1 = np.sqrt((u1 - u20) * (u1 - a3) / (u1 - u30)) / gap
    f2 = np.sqrt((a1 - u2) * (a2 - u2) / (u2 - u30)) / gap
    return f1, f2


def velocity(rad: CharacteristicRadical, phi1, phi2, sigma1: int) -> np.ndarray:
    """Cartesian unit tangent from the chain rule through the angle variables"""
    a1, a2, a3 = rad.axes
    u1, u2 = angle_coordinates(rad, phi1, phi2)
    amp1, amp2, amp3 = _amplitudes(rad, u1, u2)
    s1, c1 = np.sin(phi1), np.cos(phi1)
    s2, c2 = np.sin(phi2), np.cos(phi2)
    x1, x2, x3 = c1 * amp1, s1 * amp2, s2 * amp3
    k2 = (rad.u2_0 - a3) * s2 * c2
    d_phi1 = np.array([-s1 * amp1, c1 * amp2, x3 * (a1 - a2) * s1 * c1 / (u1 - a3)])
    d_phi2 = np.array([-x1 * k2 / (a1 - u2), -x2 * k2 / (a2 - u2), c2 * amp3])
    f1, f2 = angle_rates(rad, phi1, phi2)
    return sigma1 * f1 * d_phi1 + f2 * d_phi2


def _du_ds(a: np.ndarray, u: float, x: np.ndarray, v: np.ndarray) -> float:
    normal = x / (a - u)
    return float(-2.0 * normal @ v / (normal @ normal))


def first_angle(axes, x, u1: Optional[float] = None) -> float:
    """First angle variable of any point, from u1 and the signs of x1, x2"""
    a1, a2, _ = axes
    if u1 is None:
        u1 = float(confocal_parameters(ConfocalFamily(axes=tuple(axes)), x)[0])
    u1 = float(np.clip(u1, a2, a1))
    p = np.sqrt((u1 - a2) / (a1 - a2))
    q = np.sqrt((a1 - u1) / (a1 - a2))
    return float(np.arctan2((1 if x[1] >= 0 else -1) * p, (1 if x[0] >= 0 else -1) * q))


def angle_state(rad: CharacteristicRadical, x, v, s: float = 0.0) -> GeodesicState:
    """Angle variables and sigma1 of a point on the ellipsoid moving with unit tangent v"""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    a1, a2, a3 = rad.axes
    a = rad.a
    u = confocal_parameters(ConfocalFamily(axes=rad.axes), x)
    u1 = float(np.clip(u[0], a2, a1))
    u2 = float(np.clip(u[1], a3, rad.u2_0))

    phi1 = first_angle(rad.axes, x, u1)

    s2 = (1 if x[2] >= 0 else -1) * np.sqrt(np.clip((u2 - a3) / (rad.u2_0 - a3), 0.0, 1.0))
    c2 = np.sqrt(max(0.0, 1.0 - s2 * s2))
    if abs(s2) > 1e-3 and c2 > 1e-9:
        # d(sin phi2) has the sign of cos phi2 because phi2 increases
        rate = _du_ds(a, u2, x, v) / (2.0 * s2 * (rad.u2_0 - a3))
        c2 = c2 if rate >= 0 else -c2
    elif c2 > 1e-9:
        c2 = c2 if v[2] >= 0 else -c2
    phi2 = float(np.arctan2(s2, c2))

    s1, c1 = np.sin(phi1), np.cos(phi1)
    if abs(s1 * c1) > 1e-3:
        sigma1 = np.sign(_du_ds(a, u1, x, v) * s1 * c1)
    elif abs(c1) < abs(s1):
        sigma1 = -np.sign(v[0] * s1)
    else:
        sigma1 = np.sign(v[1] * c1)
    return GeodesicState(rad=rad, phi1=phi1, phi2=phi2, sigma1=int(sigma1 or 1), s=s)


class GeodesicEvent(BaseModel):
    """Turning point or plane crossing met along a geodesic"""
    model_config = ConfigDict(frozen=True)

    s: float
    kind: str  # x1_plane, x2_plane, x3_plane, hyperboloid


class GeodesicPath(BaseModel):
    """Integrated geodesic with dense output in the angle variables"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    start: GeodesicState
    length: float
    s: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    points: np.ndarray
    events: Tuple[GeodesicEvent, ...]
    solution: Any

    def state_at(self, s: float) -> GeodesicState:
        phi1, phi2 = self.solution(s)
        return GeodesicState(rad=self.start.rad, phi1=float(phi1), phi2=float(phi2), sigma1=self.start.sigma1, s=s)

    def point_at(self, s: float) -> np.ndarray:
        phi1, phi2 = self.solution(s)
        return cartesian(self.start.rad, phi1, phi2)

    def velocity_at(self, s: float) -> np.ndarray:
        phi1, phi2 = self.solution(s)
        return velocity(self.start.rad, phi1, phi2, self.start.sigma1)


def _crossings(solution, index: int, s_grid: np.ndarray, values: np.ndarray) -> List[Tuple[float, int]]:
    marks = np.floor(values / HALF_PI)
    found = []
    for i in np.nonzero(np.diff(marks))[0]:
        lo_mark, hi_mark = marks[i], marks[i + 1]
        for level in range(int(min(lo_mark, hi_mark)) + 1, int(max(lo_mark, hi_mark)) + 1):
            target = level * HALF_PI
            root = optimize.brentq(
                lambda t: solution(t)[index] - target, s_grid[i], s_grid[i + 1], xtol=1e-14
            )
            found.append((float(root), level))
    return found


def integrate_geodesic(start: GeodesicState, length: float, samples: int = 401) -> GeodesicPath:
    """Integrate a geodesic for the given arc length"""
    rad = start.rad
    sigma1 = start.sigma1

    def rhs(_s, y):
        f1, f2 = angle_rates(rad, y[0], y[1])
        return [sigma1 * f1, f2]

    sol = solve_ivp(
        rhs,
        (0.0, length),
        [start.phi1, start.phi2],
        method=settings.ode_method,
        rtol=settings.ode_rtol,
        atol=settings.ode_atol,
        dense_output=True,
    )
    if not sol.success:
        raise StiffnessError("geodesic integration failed", message=sol.message)
    s = np.linspace(0.0, length, samples)
    phi1, phi2 = sol.sol(s)

    events = []
    for root, level in _crossings(sol.sol, 0, s, phi1):
        events.append(GeodesicEvent(s=root, kind="x2_plane" if level % 2 == 0 else "x1_plane"))
    for root, level in _crossings(sol.sol, 1, s, phi2):
        events.append(GeodesicEvent(s=root, kind="x3_plane" if level % 2 == 0 else "hyperboloid"))
    events.sort(key=lambda e: e.s)
    logger.debug("geodesic_integrated", length=length, events=len(events), nfev=sol.nfev)

    return GeodesicPath(
        start=start,
        length=length,
        s=s,
        phi1=phi1,
        phi2=phi2,
        points=cartesian(rad, phi1, phi2),
        events=tuple(events),
        solution=sol.sol,
    )


def geodesic_to_branch(
    rad: CharacteristicRadical, phi1: float, phi2: float, sigma1: int, phi2_target: float, samples: int = 65
) -> Tuple[float, float, np.ndarray]:
    """Integrate with phi2 as the independent variable up to phi2_target.

    Returns the final phi1, the (unsigned) arc length and sampled points.
    """
    if phi2_target == phi2:
        return phi1, 0.0, cartesian(rad, np.array([phi1]), np.array([phi2]))

    def rhs(_t, y):
        f1, f2 = angle_rates(rad, y[0], _t)
        return [sigma1 * f1 / f2, 1.0 / f2]

    sol = solve_ivp(
        rhs,
        (phi2, phi2_target),
        [phi1, 0.0],
        method=settings.ode_method,
        rtol=settings.ode_rtol,
        atol=settings.ode_atol,
        dense_output=True,
    )
    if not sol.success:
        raise StiffnessError("geodesic integration failed", message=sol.message)
    t = np.linspace(phi2, phi2_target, samples)
    y = sol.sol(t)
    return float(sol.y[0, -1]), float(abs(sol.y[1, -1])), cartesian(rad, y[0], t)


def jacobi_constant(state: GeodesicState, basepoint: GeodesicState) -> float:
    """Signed sweep difference between the two angle paths from the basepoint.

    Stays at zero along a geodesic started at the basepoint.
    """
    rad = state.rad
    p = monic(rad.u3_0)
    first = sweep_integral(rad, 1, basepoint.phi1, state.phi1, p)
    second = sweep_integral(rad, 2, basepoint.phi2, state.phi2, p)
    return state.sigma1 * first - second


def phi(
    rad: CharacteristicRadical,
    p: EllipticPoint,
    signs: Sequence[int],
    basepoint: EllipticPoint,
) -> float:
    """Distance function whose level sets are orthogonal to the common tangents.

    Phi = 1/2 sum_k eps_k int |q(u)| du / sqrt(Delta(u)) with
    q = (u - u2_0)(u - u3_0), integrated from the basepoint coordinates.
    """
    q = monic(rad.u2_0, rad.u3_0)
    total = 0.0
    for k in range(3):
        lo, hi = basepoint.u[k], p.u[k]
        if lo == hi:
            continue
        poly = -q if k == 1 else q
        total += signs[k] * hyperelliptic(rad, poly, lo, hi)
    return 0.5 * total


def phi_gradient_norm(rad: CharacteristicRadical, p: EllipticPoint) -> float:
    """|grad Phi|^2 assembled from the metric coefficients"""
    h2 = metric_coeffs(rad.axes, p)
    u = np.asarray(p.u)
    q = (u - rad.u2_0) * (u - rad.u3_0)
    delta = rad.delta(u)
    return float(np.sum(0.25 * q * q / delta / h2))


def phase_measure(rad: CharacteristicRadical, phi_a: float, phi_b: float) -> float:
    """Weighted u1-sweep int |du1| (u1 - u3_0) / sqrt(Delta) in the first angle variable"""
    a1, a2, a3 = rad.axes

    def f(t):
        u1 = a2 + (a1 - a2) * np.sin(t) ** 2
        return 2.0 * np.sqrt((u1 - rad.u3_0) / ((u1 - rad.u2_0) * (u1 - a3)))[None, :]

    return float(integrate_smooth(f, phi_a, phi_b)[0])


def curvature_arc_length(rad: CharacteristicRadical, phi_a: float, phi_b: float) -> float:
    """Length of the arc of the line of curvature (u2, u3) = (u2_0, u3_0) between two phases"""
    a1, a2, a3 = rad.axes

    def f(t):
        u1 = a2 + (a1 - a2) * np.sin(t) ** 2
        return np.sqrt((u1 - rad.u2_0) * (u1 - rad.u3_0) / (u1 - a3))[None, :]

    return abs(float(integrate_smooth(f, phi_a, phi_b)[0]))


def curvature_line_point(rad: CharacteristicRadical, phi1, branch: int = 1) -> np.ndarray:
    """Point of the line of curvature u2 = u2_0, u3 = u3_0; branch is the sign of x3"""
    return cartesian(rad, phi1, np.full_like(np.asarray(phi1, dtype=float), branch * HALF_PI))


# Cartesian cross-check

def cartesian_geodesic(axes, u3_0: float, x0, v0, length: float):
    """Geodesic of the ellipsoid sum x^2 / (a - u3_0) = 1 integrated in R^6"""
    d = 1.0 / (np.asarray(axes, dtype=float) - u3_0)

    def rhs(_s, y):
        x, v = y[:3], y[3:]
        dx = d * x
        accel = -(v @ (d * v)) / (dx @ dx) * dx
        return np.concatenate([v, accel])

    v0 = np.asarray(v0, dtype=float)
    sol = solve_ivp(
        rhs,
        (0.0, length),
        np.concatenate([np.asarray(x0, dtype=float), v0 / np.linalg.norm(v0)]),
        method=settings.ode_method,
        rtol=1e-12,
        atol=1e-13,
        dense_output=True,
    )
    if not sol.success:
        raise StiffnessError("cartesian geodesic integration failed", message=sol.message)
    return sol.sol


def umbilic(axes, u3_0: float) -> np.ndarray:
    """Umbilic point with x1, x3 > 0 of the ellipsoid u3 = u3_0"""
    a1, a2, a3 = axes
    return np.array([
        np.sqrt((a1 - a2) * (a1 - u3_0) / (a1 - a3)),
        0.0,
        np.sqrt((a2 - a3) * (a3 - u3_0) / (a1 - a3)),
    ])


def umbilic_passage(axes, u3_0: float, direction_angle: float, length: Optional[float] = None) -> Tuple[float, float]:
    """Closest approach to the opposite umbilic of the geodesic leaving an umbilic.

    Returns (distance, arc length at closest approach).
    """
    a1, a2, a3 = axes
    x0 = umbilic(axes, u3_0)
    normal = x0 / (np.asarray(axes) - u3_0)
    normal /= np.linalg.norm(normal)
    e2 = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(e2, normal)
    v0 = np.cos(direction_angle) * e1 + np.sin(direction_angle) * e2
    length = length or 2.0 * np.pi * np.sqrt(a1 - u3_0)
    sol = cartesian_geodesic(axes, u3_0, x0, v0, length)
    s = np.linspace(0.05 * length, length, 4001)
    dist = np.linalg.norm(sol(s)[:3].T + x0, axis=1)
    i = int(np.argmin(dist))
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, s.size - 1)]
    res = optimize.minimize_scalar(
        lambda t: np.linalg.norm(sol(t)[:3] + x0), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
    )
    return float(res.fun), float(res.x)


class ClosedGeodesicReport(BaseModel):
    """Rationality residual and measured closure of a geodesic"""
    model_config = ConfigDict(frozen=True)

    residual: float
    predicted_length: float
    closure_gap: Optional[float] = None
    measured_length: Optional[float] = None
    direction_gap: Optional[float] = None
    closed: bool = False


def closed_geodesic_check(
    axes,
    u3_0: float,
    u2_0: float,
    w: WindingCounts,
    phi1_start: float = 0.3,
    tol: float = 1e-8,
) -> ClosedGeodesicReport:
    """Check the rationality condition and, if it holds, the Cartesian closure"""
    if w.m != 0:
        raise ValueError("closed geodesics have m = 0")
    rad = CharacteristicRadical(axes=tuple(axes), u2_0=u2_0, u3_0=u3_0)
    p = monic(u3_0)
    residual = w.n * I1(rad, p) - w.n_prime * J2(rad, p)
    lp = monic(0.0, u3_0)
    predicted = w.n * I1(rad, lp) - w.n_prime * J2(rad, lp)
    if abs(residual) > tol:
        return ClosedGeodesicReport(residual=residual, predicted_length=predicted)

    start = GeodesicState(rad=rad, phi1=phi1_start, phi2=0.0, sigma1=1)
    path = integrate_geodesic(start, 1.02 * predicted, samples=64)
    measured = optimize.brentq(
        lambda s: path.solution(s)[1] - w.n_prime * np.pi, 0.98 * predicted, 1.02 * predicted, xtol=1e-14
    )
    x0, x1 = path.point_at(0.0), path.point_at(predicted)
    v0, v1 = path.velocity_at(0.0), path.velocity_at(predicted)
    gap = float(np.linalg.norm(x1 - x0))
    dgap = float(np.linalg.norm(v1 - v0))
    logger.info("closed_geodesic_checked", u2_0=u2_0, gap=gap, length=predicted)
    return ClosedGeodesicReport(
        residual=residual,
        predicted_length=predicted,
        closure_gap=gap,
        measured_length=float(measured),
        direction_gap=dgap,
        closed=gap < 1e-6,
    )


def solved_closed_geodesic(axes, u3_0: float, w: WindingCounts) -> Tuple[ClosureSolution, ClosedGeodesicReport]:
    solution = solve_closure(tuple(axes), u3_0, w, mode="closed_geodesic")
    return solution, closed_geodesic_check(axes, u3_0, solution.u2_0, w)
