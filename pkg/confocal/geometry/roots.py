"""
Polynomial root finding: closed forms for degree <= 2, companion matrix
eigenvalues above, Newton polishing, and merging of clustered real roots.
"""

from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P


def quadratic_roots(c2: complex, c1: complex, c0: complex) -> np.ndarray:
    """Roots of c2 t^2 + c1 t + c0 by the cancellation-free formula"""
    if c2 == 0:
        if c1 == 0:
            return np.array([], dtype=complex)
        return np.array([-c0 / c1], dtype=complex)
    disc = np.sqrt(complex(c1 * c1 - 4 * c2 * c0))
    # pick the sign that avoids subtracting nearly equal numbers
    if (np.conj(c1) * disc).real < 0:
        disc = -disc
    q = -0.5 * (c1 + disc)
    if q == 0:
        return np.array([0.0, 0.0], dtype=complex)
    return np.array([q / c2, c0 / q], dtype=complex)


def polynomial_roots(
    coeffs,
    polish: int = 1,
    exact: Optional[Callable[[complex], complex]] = None,
) -> np.ndarray:
    """Roots of a polynomial given low-to-high coefficients.

    Degree <= 2 uses closed forms; otherwise the eigenvalues of the companion
    matrix. Each root then gets `polish` Newton steps. When `exact` is given it
    is used for the function value, with the derivative taken from the
    coefficients.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    deg = c.size - 1
    if deg < 1:
        return np.array([], dtype=complex)
    if deg == 1:
        roots = np.array([-c[0] / c[1]])
    elif deg == 2:
        roots = quadratic_roots(c[2], c[1], c[0])
    else:
        roots = np.linalg.eigvals(P.polycompanion(c))
    dc = P.polyder(c)
    f = exact or (lambda x: P.polyval(x, c))
    for _ in range(polish):
        fx = np.array([f(r) for r in roots])
        dfx = P.polyval(roots, dc)
        step = np.where(np.abs(dfx) > 0, fx / np.where(dfx == 0, 1, dfx), 0)
        # keep the polished root only when it does not increase the residual
        trial = roots - step
        better = np.abs([f(r) for r in trial]) <= np.abs(fx)
        roots = np.where(better, trial, roots)
    return roots


def real_roots(roots: np.ndarray, imag_tol: float = 1e-7) -> Tuple[np.ndarray, int]:
    """Split off (numerically) real roots; also return how many are complex"""
    roots = np.asarray(roots, dtype=complex)
    scale = np.maximum(1.0, np.abs(roots))
    mask = np.abs(roots.imag) <= imag_tol * scale
    return np.sort(roots[mask].real), int((~mask).sum())


def merge_roots(values: np.ndarray, tol: float) -> List[Tuple[float, int]]:
    """Collapse roots closer than tol into (mean value, multiplicity)"""
    merged: List[List[float]] = []
    for v in np.sort(np.asarray(values, dtype=float)):
        if merged and abs(v - merged[-1][-1]) <= tol * max(1.0, abs(v)):
            merged[-1].append(v)
        else:
            merged.append([v])
    return [(float(np.mean(group)), len(group)) for group in merged]


def chebyshev_nodes(center: float, half_width: float, count: int) -> np.ndarray:
    k = np.arange(count)
    return center + half_width * np.cos((2 * k + 1) * np.pi / (2 * count))
