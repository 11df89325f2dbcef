"""
Real diagonal confocal families: quadric evaluation, normals, line
intersection, reflection and the tangency spectrum of a line.
"""

from typing import List, Optional, Tuple

import numpy as np
import structlog
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P

from confocal.config import settings
from confocal.errors import DegenerateLineError, OffQuadricError, PoleError, ZeroNormalError
from confocal.geometry.roots import chebyshev_nodes, merge_roots, polynomial_roots, real_roots
from confocal.schemas.geometry import ConfocalFamily, Line, Tangency, TangencySpectrum

logger = structlog.get_logger()


def _weights(family: ConfocalFamily, z: float) -> np.ndarray:
    w = family.a - z
    if np.any(np.abs(w) <= settings.eps_sep):
        raise PoleError("parameter coincides with an axis value", z=z, axes=family.axes)
    return w


def eval_Q(family: ConfocalFamily, z: float, x) -> float:
    """Q_z(x) = sum x_j^2 / (a_j - z) - 1"""
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * x / _weights(family, z)) - 1.0)


def eval_Q_scaled(family: ConfocalFamily, z: float, x) -> float:
    """Q_z(x) divided by sum x_j^2 / a_j"""
    x = np.asarray(x, dtype=float)
    scale = max(float(np.sum(x * x / family.a)), settings.eps_sep)
    return eval_Q(family, z, x) / scale


def normal_hat(family: ConfocalFamily, z: float, x, tol: Optional[float] = None) -> np.ndarray:
    """Normal x_j / (a_j - z) of Q_z at a point on it (half the gradient)"""
    tol = settings.off_quadric_tol if tol is None else tol
    x = np.asarray(x, dtype=float)
    residual = eval_Q(family, z, x)
    if abs(residual) > tol:
        raise OffQuadricError("point is not on the quadric", z=z, residual=residual)
    return x / _weights(family, z)


def reflect(direction, normal) -> np.ndarray:
    """Specular reflection of a direction in the plane orthogonal to normal"""
    d = np.asarray(direction, dtype=float)
    n = np.asarray(normal, dtype=float)
    norm = np.linalg.norm(n)
    if norm == 0 or not np.isfinite(norm):
        raise ZeroNormalError("cannot reflect in a zero normal")
    n = n / norm
    return d - 2.0 * np.dot(d, n) * n


def line_coefficients(family: ConfocalFamily, z: float, line: Line) -> Tuple[float, float, float]:
    """(alpha, beta, gamma) with Q_z(base + t dir) = alpha t^2 + 2 beta t + gamma"""
    w = _weights(family, z)
    b, d = line.p, line.d
    return float(np.sum(d * d / w)), float(np.sum(b * d / w)), float(np.sum(b * b / w) - 1.0)


def intersect_line_quadric(family: ConfocalFamily, z: float, line: Line) -> List[Tuple[float, np.ndarray]]:
    """Real intersections of a line with Q_z, ascending in t"""
    alpha, beta, gamma = line_coefficients(family, z, line)
    scale = max(beta * beta, abs(alpha * gamma), 1e-300)
    if abs(alpha) <= 1e-14 * max(1.0, abs(beta), abs(gamma)):
        if beta == 0:
            return []
        ts = [-gamma / (2.0 * beta)]
    else:
        disc = beta * beta - alpha * gamma
        if abs(disc) <= settings.tangency_rel_tol * scale:
            t = -beta / alpha
            ts = [t, t]
        elif disc < 0:
            return []
        else:
            q = -(beta + np.copysign(np.sqrt(disc), beta))
            ts = sorted([q / alpha, gamma / q])
    return [(float(t), line.at(t)) for t in ts]


def tangency_polynomial(family: ConfocalFamily, line: Line):
    """Callable P(lam): the t-discriminant of Q_lam along the line, denominators cleared"""
    a, b, d = family.a, line.p, line.d
    dim = family.dim
    pairs = [(i, j) for i in range(dim) for j in range(i + 1, dim)]
    m2 = {(i, j): (b[i] * d[j] - b[j] * d[i]) ** 2 for i, j in pairs}

    def evaluate(lam):
        w = a - lam
        total = 0.0
        for j in range(dim):
            total = total + d[j] ** 2 * np.prod([w[k] for k in range(dim) if k != j], axis=0)
        for i, j in pairs:
            rest = [w[k] for k in range(dim) if k not in (i, j)]
            total = total - m2[(i, j)] * (np.prod(rest, axis=0) if rest else 1.0)
        return total

    return evaluate


def tangency_spectrum(family: ConfocalFamily, line: Line) -> TangencySpectrum:
    """Parameters z' of the confocal quadrics tangent to a line.

    The cleared discriminant is sampled at n + 2 Chebyshev nodes spanning the
    axes and fitted exactly (its degree is n); roots come from
    `polynomial_roots` and are polished against the exact evaluation.
    """
    a = family.a
    n = family.dim - 1
    poly = tangency_polynomial(family, line)
    nodes = chebyshev_nodes(float(np.mean(a)), float(a[0] - a[-1]) / 2.0 + 1.0, n + 2)
    samples = np.array([poly(complex(v)).real for v in nodes])
    if np.max(np.abs(samples)) <= settings.tol_q:
        raise DegenerateLineError("tangency polynomial vanishes identically", line=line.base)
    coeffs = Polynomial.fit(nodes, samples, n).convert().coef
    roots = polynomial_roots(coeffs, polish=2, exact=lambda lam: poly(lam))
    values, complex_count = real_roots(roots)

    tangencies = []
    for z, mult in merge_roots(values, settings.root_merge_tol):
        if np.any(np.abs(a - z) <= settings.root_merge_tol * max(1.0, abs(z))):
            nan = float("nan")
            tangencies.append(
                Tangency(z=z, t=nan, point=(nan,) * family.dim, multiplicity=mult, singular=True)
            )
            continue
        alpha, beta, _ = line_coefficients(family, z, line)
        t = -beta / alpha if alpha != 0 else 0.0
        tangencies.append(
            Tangency(z=z, t=float(t), point=tuple(float(v) for v in line.at(t)), multiplicity=mult)
        )
    logger.debug("tangency_spectrum", z=[tg.z for tg in tangencies], complex_count=complex_count)
    return TangencySpectrum(values=tuple(tangencies), complex_count=complex_count)


def confocal_parameters(family: ConfocalFamily, x) -> np.ndarray:
    """All parameters z with Q_z(x) = 0, descending (elliptic coordinates)"""
    x = np.asarray(x, dtype=float)
    a = family.a
    dim = family.dim
    sign = (-1.0) ** dim
    full = sign * P.polyfromroots(a)
    cleared = full.copy()
    for j in range(dim):
        rest = sign * (-1.0) * P.polyfromroots(np.delete(a, j))
        cleared = P.polysub(cleared, x[j] ** 2 * rest)

    def exact(u):
        w = a - u
        return np.prod(w) - sum(x[j] ** 2 * np.prod(np.delete(w, j)) for j in range(dim))

    roots = polynomial_roots(cleared, polish=3, exact=exact)
    return np.sort(roots.real)[::-1]


def principal_frame(family: ConfocalFamily, x) -> Tuple[np.ndarray, np.ndarray]:
    """Confocal parameters through x and the unit normals of those quadrics.

    On a coordinate plane the quadric pinned to a_j degenerates into the plane
    and its normal is taken as e_j.
    """
    x = np.asarray(x, dtype=float)
    a = family.a
    u = confocal_parameters(family, x)
    tol = settings.root_merge_tol
    normals = []
    for uk in u:
        w = a - uk
        pinned = np.abs(w) <= tol * max(1.0, abs(uk))
        if np.any(pinned):
            n = pinned.astype(float)
        else:
            n = x / w
        normals.append(n / np.linalg.norm(n))
    return u, np.array(normals)


def ivory_affinity(family: ConfocalFamily, z_from: float, z_to: float, x) -> np.ndarray:
    """Diagonal Ivory map from Q_{z_from} to Q_{z_to}"""
    w_from = _weights(family, z_from)
    w_to = _weights(family, z_to)
    return np.sqrt(w_to / w_from) * np.asarray(x, dtype=float)
