"""
Hyperelliptic integrals of P(u) du / sqrt(Delta(u)) between consecutive
roots of the radical, and the closure and length formulas built on them.

Endpoint square-root singularities are removed by substitution:

    finite interval (r1, r2):   u = c + h sin(phi)
    left interval  (-inf, r0):  u = r0 - D sin(psi)^2   (finite lower end)
                                u = r0 - D tan(psi)^2   (lower end at -inf)

after which the integrand is analytic and Gauss-Legendre with node doubling
converges spectrally.
"""

from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from numpy.polynomial import polynomial as P
from pydantic import BaseModel, ConfigDict
from scipy import integrate, optimize

from confocal.config import settings
from confocal.errors import IntervalError, NotFound
from confocal.schemas.geometry import CharacteristicRadical, PlanarRadical, WindingCounts

logger = structlog.get_logger()

Radical = Union[CharacteristicRadical, PlanarRadical]
Poly = Sequence[float]

ONE: Tuple[float, ...] = (1.0,)
U: Tuple[float, ...] = (0.0, 1.0)
U2: Tuple[float, ...] = (0.0, 0.0, 1.0)


def monic(*roots: float) -> np.ndarray:
    """Ascending coefficients of prod (u - r)"""
    return P.polyfromroots(roots) if roots else np.array([1.0])


@lru_cache(maxsize=32)
def _gauss_legendre(count: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(count)


def integrate_smooth(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    nodes: Optional[int] = None,
) -> np.ndarray:
    """Gauss-Legendre on [a, b] with node doubling.

    f may return an array of shape (..., k) for k integrands sharing the nodes.
    Doubling stops when every integrand changes by less than quad_rel_tol
    relative to the integral of its absolute value.
    """
    if a == b:
        head = np.asarray(f(np.array([a])))
        return np.zeros(head.shape[:-1] if head.ndim > 1 else ())
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    if nodes is not None:
        x, w = _gauss_legendre(nodes)
        return half * np.tensordot(np.asarray(f(mid + half * x)), w, axes=([-1], [0]))

    count = settings.quad_min_nodes
    previous = None
    while True:
        x, w = _gauss_legendre(count)
        vals = np.asarray(f(mid + half * x))
        value = half * np.tensordot(vals, w, axes=([-1], [0]))
        scale = abs(half) * np.tensordot(np.abs(vals), w, axes=([-1], [0]))
        if previous is not None:
            change = np.abs(value - previous)
            if np.all(change <= settings.quad_rel_tol * np.maximum(scale, 1e-300)):
                return value
        if count >= settings.quad_max_nodes:
            logger.warning("quadrature_not_converged", nodes=count, interval=[float(a), float(b)])
            return value
        previous = value
        count *= 2


def _positivity_interval(roots: np.ndarray, kappa: float, lo: float, hi: float) -> Tuple[int, float, float]:
    """Index i and bounds of the root interval containing [lo, hi]; i = -1 for (-inf, r0)"""
    n = roots.size
    bounds = [-np.inf, *roots.tolist(), np.inf]
    span = max(1.0, float(np.max(np.abs(roots))))
    slack = 1e-12 * span
    for i in range(-1, n):
        left, right = bounds[i + 1], bounds[i + 2]
        if lo >= left - slack and hi <= right + slack:
            above = n - 1 - i
            sign = kappa * (-1.0) ** above
            if sign <= 0 or right == np.inf:
                raise IntervalError(
                    "radical is negative on the integration interval", lo=lo, hi=hi, left=left, right=right
                )
            return i, left, right
    raise IntervalError("interval crosses a root of the radical", lo=lo, hi=hi, roots=roots)


def root_interval_integral(
    roots: Sequence[float],
    kappa: float,
    polys: Sequence[Poly],
    lo: float,
    hi: float,
    nodes: Optional[int] = None,
) -> np.ndarray:
    """Integrals of P du / sqrt(kappa prod(u - r)) over [lo, hi] for several P.

    [lo, hi] must lie in one interval between consecutive roots (or left of
    the smallest root) on which the radical is positive.
    """
    roots = np.sort(np.asarray(roots, dtype=float))
    coeffs = [np.asarray(p, dtype=float) for p in polys]
    if lo == hi:
        return np.zeros(len(coeffs))
    if lo > hi:
        return -root_interval_integral(roots, kappa, polys, hi, lo, nodes)

    i, left, right = _positivity_interval(roots, kappa, lo, hi)
    lo, hi = max(lo, left), min(hi, right)

    if i >= 0:
        others = np.delete(roots, [i, i + 1])
        c, h = 0.5 * (left + right), 0.5 * (right - left)

        def integrand(phi):
            u = c + h * np.sin(phi)
            rest = -kappa * np.prod(u[None, :] - others[:, None], axis=0) if others.size else -kappa * np.ones_like(u)
            inv = 1.0 / np.sqrt(rest)
            return np.array([P.polyval(u, cf) * inv for cf in coeffs])

        a_phi = np.arcsin(np.clip((lo - c) / h, -1.0, 1.0))
        b_phi = np.arcsin(np.clip((hi - c) / h, -1.0, 1.0))
        return integrate_smooth(integrand, a_phi, b_phi, nodes)

    r0 = right
    others = roots[1:]
    if np.isinf(lo):
        degree_cap = roots.size / 2.0 - 1.0
        for cf in coeffs:
            if np.trim_zeros(cf, "b").size - 1 >= degree_cap:
                raise IntervalError("integral diverges at -inf for this polynomial", degree=cf.size - 1)
        d = max(1.0, r0 - hi)

        def integrand(psi):
            t = np.tan(psi)
            u = r0 - d * t * t
            rest = -kappa * np.prod(u[None, :] - others[:, None], axis=0)
            weight = 2.0 * np.sqrt(d) / (np.cos(psi) ** 2 * np.sqrt(rest))
            return np.array([P.polyval(u, cf) * weight for cf in coeffs])

        psi_hi = np.arctan(np.sqrt(max(r0 - hi, 0.0) / d))
        return integrate_smooth(integrand, psi_hi, 0.5 * np.pi, nodes)

    d = r0 - lo

    def integrand(psi):
        u = r0 - d * np.sin(psi) ** 2
        rest = -kappa * np.prod(u[None, :] - others[:, None], axis=0)
        weight = 2.0 * np.sqrt(d) * np.cos(psi) / np.sqrt(rest)
        return np.array([P.polyval(u, cf) * weight for cf in coeffs])

    psi_hi = np.arcsin(np.sqrt(np.clip((r0 - hi) / d, 0.0, 1.0)))
    return integrate_smooth(integrand, psi_hi, 0.5 * np.pi, nodes)


def hyperelliptic(rad: Radical, poly: Poly, lo: float, hi: float, nodes: Optional[int] = None) -> float:
    """Integral of P(u) du / sqrt(Delta(u)) over [lo, hi]"""
    return float(root_interval_integral(rad.roots, rad.kappa, [poly], lo, hi, nodes)[0])


def hyperelliptic_batch(rad: Radical, polys: Sequence[Poly], lo: float, hi: float) -> np.ndarray:
    return root_interval_integral(rad.roots, rad.kappa, polys, lo, hi)


def reference_integral(rad: CharacteristicRadical, poly: Poly) -> float:
    """Independent value of the integral over (a2, a1) with scipy's algebraic endpoint weight"""
    a1, a2, a3 = rad.axes
    cf = np.asarray(poly, dtype=float)

    def f(u):
        return P.polyval(u, cf) / np.sqrt((u - rad.u2_0) * (u - rad.u3_0) * (u - a3))

    value, _ = integrate.quad(f, a2, a1, weight="alg", wvar=(-0.5, -0.5), epsabs=1e-14, epsrel=1e-13, limit=200)
    return float(value)


# Named integrals over the three working intervals
def I1(rad: CharacteristicRadical, poly: Poly) -> float:
    a1, a2, _ = rad.axes
    return hyperelliptic(rad, poly, a2, a1)


def J2(rad: CharacteristicRadical, poly: Poly) -> float:
    return hyperelliptic(rad, poly, rad.axes[2], rad.u2_0)


def J3(rad: CharacteristicRadical, poly: Poly, u3_1: float) -> float:
    return hyperelliptic(rad, poly, u3_1, rad.u3_0)


def winding_sum(rad: CharacteristicRadical, poly: Poly, u3_1: float, n: float, n_prime: float, m: float) -> float:
    """n I1[P] - n' J2[P] + m J3[P]"""
    total = 0.0
    if n:
        total += n * I1(rad, poly)
    if n_prime:
        total -= n_prime * J2(rad, poly)
    if m:
        total += m * J3(rad, poly, u3_1)
    return total


def darboux_residuals(rad: CharacteristicRadical, u3_1: float, w: WindingCounts) -> Tuple[float, float]:
    """Rationality residuals with P = 1 and P = u; both vanish for a closed billiard"""
    if u3_1 >= rad.u3_0:
        raise IntervalError("vertex ellipsoid must lie outside the caustic ellipsoid", u3_1=u3_1, u3_0=rad.u3_0)
    return (
        winding_sum(rad, ONE, u3_1, w.n, w.n_prime, w.m),
        winding_sum(rad, U, u3_1, w.n, w.n_prime, w.m),
    )


def thread_residual(rad: CharacteristicRadical, u3_1: float, w: WindingCounts) -> float:
    """Rationality residual with P = u - u3_0 (geodesic and rectilinear threads)"""
    return winding_sum(rad, monic(rad.u3_0), u3_1, w.n, w.n_prime, w.m)


def perimeter_formula(
    rad: CharacteristicRadical,
    u3_1: float,
    w: Optional[WindingCounts] = None,
    variant: str = "darb",
) -> float:
    """Length of a closed polygon or thread from its winding counts.

    Returns the geometric length; the doubled forms equal twice these values.
    """
    q = monic(rad.u2_0, rad.u3_0)
    if variant == "staud":
        return winding_sum(rad, q, u3_1, 2, 2, 1)
    if w is None:
        raise ValueError(f"variant {variant} needs winding counts")
    if variant == "darb":
        return winding_sum(rad, U2, u3_1, w.n, w.n_prime, w.m)
    if variant == "darb1":
        return winding_sum(rad, monic(0.0, rad.u3_0), u3_1, w.n, w.n_prime, w.m)
    if variant == "staud1":
        return winding_sum(rad, q, u3_1, w.n, w.n_prime, 0.5 * w.m)
    raise ValueError(f"Unknown perimeter variant: {variant}")


def half_turn_criterion(rad: CharacteristicRadical) -> float:
    """I1[u - u3_0] - J2[u - u3_0]; positive when a geodesic makes more than half a turn per hyperboloid period"""
    p = monic(rad.u3_0)
    return I1(rad, p) - J2(rad, p)


def pen_sweep(rad: CharacteristicRadical, u3_1: float) -> float:
    """-1/2 J3[u - u3_0]: weighted sweep of one pen-side segment from u3_1 to the caustic"""
    return -0.5 * hyperelliptic(rad, monic(rad.u3_0), u3_1, rad.u3_0)


def curvature_budget(rad: CharacteristicRadical, u3_1: float) -> float:
    """Weighted u1-sweep left for curvature arcs of a Staude thread: 4 (h - g(u3_1))"""
    return 4.0 * (half_turn_criterion(rad) - pen_sweep(rad, u3_1))


class PenRegime(BaseModel):
    """Feasibility of Staude threads over pen ellipsoids"""
    model_config = ConfigDict(frozen=True)

    regime: str  # always, critical, never
    half_turn: float
    far_sweep: float
    critical_u3_1: Optional[float] = None


def critical_pen_parameter(rad: CharacteristicRadical) -> PenRegime:
    """Classify pen ellipsoids; in the critical regime locate the one with zero budget"""
    h = half_turn_criterion(rad)
    far = -0.5 * hyperelliptic(rad, monic(rad.u3_0), -np.inf, rad.u3_0)
    if h <= 0:
        return PenRegime(regime="never", half_turn=h, far_sweep=far)
    if h >= far:
        return PenRegime(regime="always", half_turn=h, far_sweep=far)

    a1, _, a3 = rad.axes
    lo = rad.u3_0 - (a1 - a3)
    while pen_sweep(rad, lo) <= h:
        lo = rad.u3_0 - 2.0 * (rad.u3_0 - lo)
    root = optimize.brentq(lambda v: pen_sweep(rad, v) - h, lo, rad.u3_0, xtol=1e-14, rtol=1e-14)
    return PenRegime(regime="critical", half_turn=h, far_sweep=far, critical_u3_1=float(root))


def sweep_integral(rad: CharacteristicRadical, k: int, phi_a: float, phi_b: float, poly: Poly) -> float:
    """Signed integral of |du^k| P / sqrt(Delta) along the angle path phi_a -> phi_b.

    u1 = a2 + (a1 - a2) sin^2(phi), u2 = a3 + (u2_0 - a3) sin^2(phi); the
    path is cut at multiples of pi/2 where u^k turns.
    """
    a1, a2, a3 = rad.axes
    low, high = (a2, a1) if k == 1 else (a3, rad.u2_0)
    sign = 1.0
    if phi_b < phi_a:
        phi_a, phi_b, sign = phi_b, phi_a, -1.0
    cuts = np.arange(np.ceil(phi_a / (0.5 * np.pi)), np.floor(phi_b / (0.5 * np.pi)) + 1) * 0.5 * np.pi
    marks = [phi_a, *[c for c in cuts if phi_a < c < phi_b], phi_b]
    full = None
    total = 0.0
    for left, right in zip(marks[:-1], marks[1:]):
        ul = low + (high - low) * np.sin(left) ** 2
        ur = low + (high - low) * np.sin(right) ** 2
        lo, hi = min(ul, ur), max(ul, ur)
        if np.isclose(hi - lo, high - low, rtol=0, atol=1e-15 * (high - low)):
            if full is None:
                full = hyperelliptic(rad, poly, low, high)
            total += full
        else:
            total += hyperelliptic(rad, poly, lo, hi)
    return sign * total


class ClosureSolution(BaseModel):
    """Parameters solving a rationality condition"""
    model_config = ConfigDict(frozen=True)

    mode: str
    u2_0: float
    u3_0: float
    u3_1: Optional[float] = None
    residual: float


def _bracket_scan(f: Callable[[float], float], lo: float, hi: float, count: int = 64) -> Tuple[List[Dict[str, float]], Optional[Tuple[float, float]]]:
    grid = np.linspace(lo, hi, count)
    values = [f(v) for v in grid]
    samples = [{"x": float(x), "residual": float(r)} for x, r in zip(grid, values)]
    for i in range(count - 1):
        if np.sign(values[i]) != np.sign(values[i + 1]):
            return samples, (float(grid[i]), float(grid[i + 1]))
    return samples, None


def solve_closure(
    axes: Tuple[float, float, float],
    u3_0: float,
    w: WindingCounts,
    mode: str = "darboux2",
    u2_0: Optional[float] = None,
    bracket: Optional[Tuple[float, float]] = None,
    grid_size: int = 32,
) -> ClosureSolution:
    """Solve the rationality conditions for closure.

    thread1: u3_1 from n I1 - n' J2 + m J3 = 0 with P = u - u3_0, u2_0 given.
    darboux2: (u2_0, u3_1) from both billiard conditions (P = 1, P = u).
    closed_geodesic: u2_0 from the thread condition with m = 0.
    """
    a1, a2, a3 = axes
    if mode == "thread1":
        return _solve_thread1(axes, u3_0, w, u2_0, bracket)
    if mode == "closed_geodesic":
        return _solve_closed_geodesic(axes, u3_0, w, bracket)
    if mode == "darboux2":
        return _solve_darboux2(axes, u3_0, w, grid_size)
    raise ValueError(f"Unknown closure mode: {mode}")


def _solve_thread1(axes, u3_0, w, u2_0, bracket) -> ClosureSolution:
    if u2_0 is None:
        raise ValueError("thread1 needs u2_0")
    rad = CharacteristicRadical(axes=axes, u2_0=u2_0, u3_0=u3_0)
    if w.n == 0 and w.n_prime == 0:
        return ClosureSolution(mode="thread1", u2_0=u2_0, u3_0=u3_0, u3_1=u3_0, residual=0.0)
    p = monic(u3_0)
    base = winding_sum(rad, p, u3_0, w.n, w.n_prime, 0)

    def f(u3_1: float) -> float:
        return base + w.m * J3(rad, p, u3_1)

    if bracket is None:
        width = axes[0] - axes[2]
        lo = u3_0 - width
        for _ in range(60):
            if f(lo) < 0 or w.m == 0:
                break
            lo = u3_0 - 2.0 * (u3_0 - lo)
        bracket = (lo, u3_0)
    lo, hi = bracket
    flo, fhi = f(lo), f(hi)
    if np.sign(flo) == np.sign(fhi):
        samples, _ = _bracket_scan(f, lo, hi, 32)
        raise NotFound("no sign change of the thread residual", grid=samples, mode="thread1")
    root = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    logger.debug("closure_found", mode="thread1", u3_1=root)
    return ClosureSolution(mode="thread1", u2_0=u2_0, u3_0=u3_0, u3_1=float(root), residual=abs(f(root)))


def _solve_closed_geodesic(axes, u3_0, w, bracket) -> ClosureSolution:
    if w.m != 0:
        raise ValueError("closed geodesics have m = 0")
    a1, a2, a3 = axes
    p = monic(u3_0)

    def f(u2_0: float) -> float:
        rad = CharacteristicRadical(axes=axes, u2_0=u2_0, u3_0=u3_0)
        return w.n * I1(rad, p) - w.n_prime * J2(rad, p)

    if bracket is None:
        margin = 1e-3 * (a2 - a3)
        bracket = (a3 + margin, a2 - margin)
    lo, hi = bracket
    if np.sign(f(lo)) == np.sign(f(hi)):
        samples, found = _bracket_scan(f, lo, hi)
        if found is None:
            raise NotFound("no closed geodesic for these winding counts", grid=samples, mode="closed_geodesic")
        lo, hi = found
    root = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    logger.debug("closure_found", mode="closed_geodesic", u2_0=root)
    return ClosureSolution(mode="closed_geodesic", u2_0=float(root), u3_0=u3_0, residual=abs(f(root)))


def _solve_darboux2(axes, u3_0, w, grid_size) -> ClosureSolution:
    a1, a2, a3 = axes
    width = a1 - a3
    span = a2 - a3

    def unpack(v):
        u2_0 = a3 + span * v[0]
        u3_1 = u3_0 - v[1] / (1.0 - v[1]) * width
        return u2_0, u3_1

    def residual(v) -> np.ndarray:
        u2_0, u3_1 = unpack(v)
        rad = CharacteristicRadical(axes=axes, u2_0=u2_0, u3_0=u3_0)
        return np.asarray(darboux_residuals(rad, u3_1, w))

    ticks = np.linspace(0.02, 0.98, grid_size)
    grid = []
    for s in ticks:
        for tau in ticks:
            r = residual((s, tau))
            u2_0, u3_1 = unpack((s, tau))
            grid.append({"u2_0": float(u2_0), "u3_1": float(u3_1), "r1": float(r[0]), "r2": float(r[1])})
    order = sorted(range(len(grid)), key=lambda i: np.hypot(grid[i]["r1"], grid[i]["r2"]))

    for idx in order[:6]:
        v = np.array([ticks[idx // grid_size], ticks[idx % grid_size]])
        found = _damped_newton(residual, v)
        if found is not None:
            u2_0, u3_1 = unpack(found)
            r = residual(found)
            logger.info("closure_found", mode="darboux2", u2_0=u2_0, u3_1=u3_1, counts=w.model_dump())
            return ClosureSolution(
                mode="darboux2", u2_0=float(u2_0), u3_0=u3_0, u3_1=float(u3_1), residual=float(np.hypot(*r))
            )

    nested = _nested_darboux2(axes, u3_0, w, ticks)
    if nested is not None:
        return nested
    raise NotFound("no Darboux closure on the searched grid", grid=grid, mode="darboux2", counts=w.model_dump())


def _nested_darboux2(axes, u3_0, w, ticks) -> Optional[ClosureSolution]:
    """Bracketing fallback: u3_1 from the P = u condition, then u2_0 from the P = 1 condition"""
    a1, a2, a3 = axes
    width = a1 - a3

    def inner(u2_0: float) -> Optional[Tuple[float, float]]:
        rad = CharacteristicRadical(axes=axes, u2_0=u2_0, u3_0=u3_0)
        u3_1 = lambda tau: u3_0 - tau / (1.0 - tau) * width
        g = lambda tau: darboux_residuals(rad, u3_1(tau), w)[1]
        _, found = _bracket_scan(g, 1e-9, ticks[-1], 64)
        if found is None:
            return None
        tau = optimize.brentq(g, *found, xtol=1e-15, rtol=1e-15, maxiter=200)
        return u3_1(tau), darboux_residuals(rad, u3_1(tau), w)[0]

    def outer(u2_0: float) -> float:
        hit = inner(u2_0)
        if hit is None:
            raise NotFound("P = u condition has no root", u2_0=u2_0)
        return hit[1]

    previous = None
    for s in ticks:
        u2_0 = a3 + (a2 - a3) * s
        hit = inner(u2_0)
        if hit is not None and previous is not None and np.sign(hit[1]) != np.sign(previous[1]):
            try:
                root = optimize.brentq(outer, previous[0], u2_0, xtol=1e-14, rtol=1e-14, maxiter=200)
            except NotFound:
                previous = None
                continue
            u3_1, _ = inner(root)
            rad = CharacteristicRadical(axes=axes, u2_0=root, u3_0=u3_0)
            r = darboux_residuals(rad, u3_1, w)
            logger.info("closure_found", mode="darboux2", method="nested", u2_0=root, u3_1=u3_1, counts=w.model_dump())
            return ClosureSolution(
                mode="darboux2", u2_0=float(root), u3_0=u3_0, u3_1=float(u3_1), residual=float(np.hypot(*r))
            )
        previous = None if hit is None else (u2_0, hit[1])
    return None


def _damped_newton(residual, v, iterations: int = 60, tol: float = 1e-10) -> Optional[np.ndarray]:
    lo, hi = 1e-6, 1.0 - 1e-6
    r = residual(v)
    for _ in range(iterations):
        norm = np.hypot(*r)
        if norm < tol:
            return v
        jac = np.empty((2, 2))
        for j in range(2):
            step = np.zeros(2)
            step[j] = 1e-7
            jac[:, j] = (residual(np.clip(v + step, lo, hi)) - residual(np.clip(v - step, lo, hi))) / 2e-7
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            return None
        damping = 1.0
        while damping > 1e-4:
            trial = np.clip(v + damping * delta, lo, hi)
            r_trial = residual(trial)
            if np.hypot(*r_trial) < norm:
                v, r = trial, r_trial
                break
            damping *= 0.5
        else:
            return None
    return v if np.hypot(*r) < tol else None
