"""
Canonical confocal families over C: square roots of symmetric Jordan
matrices, the translation term C(z), the Ivory affinity and the identity
suite relating segments, rulings and normals across confocal quadrics.

All vector products are the complex bilinear form v^T w (no conjugation).
"""

from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict
from scipy.linalg import null_space
from scipy.special import binom
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from confocal.config import settings
from confocal.errors import BranchPoleError, HypothesisError, OffQuadricError
from confocal.schemas.algebra import CanonicalQuadric, SJBlock, SJMatrix, isotropic_vector, nilpotent_block

logger = structlog.get_logger()


def principal_sqrt(c: complex) -> complex:
    """sqrt(r) e^{i theta / 2} with -pi < theta <= pi"""
    c = complex(c)
    theta = np.arctan2(c.imag, c.real)
    if theta <= -np.pi:
        theta = np.pi
    return np.sqrt(abs(c)) * np.exp(0.5j * theta)


def _block_sqrt(block: SJBlock, z: complex) -> np.ndarray:
    c = 1.0 - z * block.eigenvalue
    if abs(c) <= settings.eps_sep:
        raise BranchPoleError("I - zA is singular on a block", eigenvalue=block.eigenvalue, z=z)
    J = nilpotent_block(block.size)
    step = -z * J / c
    out = np.zeros((block.size, block.size), dtype=complex)
    power = np.eye(block.size, dtype=complex)
    for j in range(block.size):
        out += binom(0.5, j) * power
        power = power @ step
    return principal_sqrt(c) * out


def sqrt_sj(M: SJMatrix, z: complex) -> np.ndarray:
    """sqrt(I - zM) block by block; the binomial series is finite on nilpotent parts"""
    out = np.zeros((M.dimension, M.dimension), dtype=complex)
    for block, off in zip(M.blocks, M.offsets):
        out[off:off + block.size, off:off + block.size] = _block_sqrt(block, z)
    return out


def r_matrix(q: CanonicalQuadric, z: complex) -> np.ndarray:
    return np.eye(q.dim, dtype=complex) - z * q.A.realize()


def c_of_z(q: CanonicalQuadric, z: complex) -> np.ndarray:
    """Translation C(z) = -(1/2 int_0^z sqrt(R_w)^{-1} dw) B"""
    out = np.zeros(q.dim, dtype=complex)
    if q.kind == "QC":
        return out
    b = q.b
    for block, off in zip(q.A.blocks, q.A.offsets):
        part = b[off:off + block.size]
        if not np.any(part):
            continue
        if abs(block.eigenvalue) > 1e-12:
            raise BranchPoleError("translation term needs B supported on nilpotent blocks", eigenvalue=block.eigenvalue)
        J = nilpotent_block(block.size)
        acc = np.zeros(block.size, dtype=complex)
        vec = -part
        for j in range(block.size):
            acc += binom(-0.5, j) * (-1.0) ** j * z ** (j + 1) / (j + 1) * vec
            vec = J @ vec
        out[off:off + block.size] = 0.5 * acc
    return out


def translation_identities(q: CanonicalQuadric, z: complex) -> Tuple[float, float]:
    """Norms of A C(z) + (I - sqrt R) B and (I + sqrt R) C(z) + z B"""
    A = q.A.realize()
    S = sqrt_sj(q.A, z)
    C = c_of_z(q, z)
    I = np.eye(q.dim)
    return (
        float(np.linalg.norm(A @ C + (I - S) @ q.b)),
        float(np.linalg.norm((I + S) @ C + z * q.b)),
    )


def eval_Qz(q: CanonicalQuadric, z: complex, x) -> complex:
    """Q_z(x) = x^T A R^-1 x + 2 (R^-1 B)^T x + C + z B^T R^-1 B"""
    x = np.asarray(x, dtype=complex)
    A = q.A.realize()
    Rinv = np.linalg.inv(r_matrix(q, z))
    b = q.b
    return complex(x @ A @ Rinv @ x + 2 * (Rinv @ b) @ x + q.C + z * b @ Rinv @ b)


def normal_z(q: CanonicalQuadric, z: complex, x) -> np.ndarray:
    """N_z = R_z^-1 (A x + B)"""
    x = np.asarray(x, dtype=complex)
    return np.linalg.solve(r_matrix(q, z), q.A.realize() @ x + q.b)


def _on_quadric_scale(x: np.ndarray) -> float:
    return 1.0 + float(np.vdot(x, x).real)


def ivory_map(q: CanonicalQuadric, z: complex, x0, tol: Optional[float] = None) -> np.ndarray:
    """x_z = sqrt(R_z) x_0 + C(z)"""
    tol = settings.off_quadric_tol if tol is None else tol
    x0 = np.asarray(x0, dtype=complex)
    residual = abs(eval_Qz(q, 0.0, x0))
    if residual > tol * _on_quadric_scale(x0):
        raise OffQuadricError("point is not on the base quadric", residual=residual)
    return sqrt_sj(q.A, z) @ x0 + c_of_z(q, z)


def ivory_map_back(q: CanonicalQuadric, z: complex, xz) -> np.ndarray:
    """Inverse Ivory map: take Q_z as base and map by -z.

    The re-based family has R'_{-z} = R_z^-1, so sqrt(R'_{-z}) = sqrt(R_z)^-1
    and C'(-z) = z (I + sqrt(R_z)^-1)^-1 R_z^-1 B.
    """
    xz = np.asarray(xz, dtype=complex)
    S_inv = np.linalg.inv(sqrt_sj(q.A, z))
    R_inv = np.linalg.inv(r_matrix(q, z))
    I = np.eye(q.dim)
    c_back = z * np.linalg.solve(I + S_inv, R_inv @ q.b)
    return S_inv @ xz + c_back


def scaled_residual(lhs, rhs) -> float:
    lhs = np.asarray(lhs, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    diff = float(np.linalg.norm(np.atleast_1d(lhs - rhs)))
    return diff / max(1.0, float(np.linalg.norm(np.atleast_1d(lhs))), float(np.linalg.norm(np.atleast_1d(rhs))))


class Identity(str, Enum):
    IVORY = "ivory"
    HENRICI = "henrici"
    TC = "tc"
    SEGMENT_RULING = "segment_ruling"
    RULING_RULING = "ruling_ruling"
    POLAR_RULINGS = "polar_rulings"
    KEY_LEMMA = "key_lemma"


class IdentitySample(BaseModel):
    """Named points on Q_0 and tangent vectors at them"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x00: np.ndarray
    x01: np.ndarray
    w00: Optional[np.ndarray] = None
    w01: Optional[np.ndarray] = None
    w00_polar: Optional[np.ndarray] = None


def _require_on_quadric(q: CanonicalQuadric, x: np.ndarray, name: str, tol: float) -> None:
    residual = abs(eval_Qz(q, 0.0, x))
    if residual > tol * _on_quadric_scale(x):
        raise HypothesisError(f"{name} is not on the base quadric", residual=residual)


def _require_ruling(q: CanonicalQuadric, x: np.ndarray, w: Optional[np.ndarray], name: str, tol: float) -> np.ndarray:
    if w is None:
        raise HypothesisError(f"{name} is required")
    A = q.A.realize()
    scale = _on_quadric_scale(w) * _on_quadric_scale(x)
    if abs(w @ A @ w) > tol * scale or abs(w @ (A @ x + q.b)) > tol * scale:
        raise HypothesisError(f"{name} is not a ruling", w_A_w=abs(w @ A @ w))
    return w


def check_identity(
    name: str,
    sample: IdentitySample,
    q: CanonicalQuadric,
    z: complex,
    tol: float = 1e-8,
) -> float:
    """Scaled residual |LHS - RHS| / max(1, |LHS|, |RHS|) of a named identity"""
    name = Identity(name)
    A = q.A.realize()
    S = sqrt_sj(q.A, z)
    C = c_of_z(q, z)
    x00, x01 = np.asarray(sample.x00, dtype=complex), np.asarray(sample.x01, dtype=complex)

    if name is Identity.KEY_LEMMA:
        V01 = S @ x01 + C - x00
        V10 = S @ x00 + C - x01
        return scaled_residual(S @ V10, -V01 - z * (A @ x00 + q.b))

    _require_on_quadric(q, x00, "x00", tol)
    if name in (Identity.IVORY, Identity.TC, Identity.RULING_RULING):
        _require_on_quadric(q, x01, "x01", tol)
    V01 = S @ x01 + C - x00
    V10 = S @ x00 + C - x01

    if name is Identity.IVORY:
        return scaled_residual(V01 @ V01, V10 @ V10)
    if name is Identity.TC:
        return scaled_residual(V01 @ (A @ x00 + q.b), V10 @ (A @ x01 + q.b))
    if name is Identity.HENRICI:
        w = _require_ruling(q, x00, sample.w00, "w00", tol)
        wz = S @ w
        return scaled_residual(wz @ wz, w @ w)
    if name is Identity.SEGMENT_RULING:
        w = _require_ruling(q, x00, sample.w00, "w00", tol)
        lhs = V01 @ w + V10 @ (S @ w)
        return scaled_residual(lhs, -z * (A @ x00 + q.b) @ w)
    if name is Identity.RULING_RULING:
        w0 = _require_ruling(q, x00, sample.w00, "w00", tol)
        w1 = _require_ruling(q, x01, sample.w01, "w01", tol)
        return scaled_residual(w0 @ (S @ w1), (S @ w0) @ w1)
    if name is Identity.POLAR_RULINGS:
        w = sample.w00
        wh = sample.w00_polar
        if w is None or wh is None:
            raise HypothesisError("polar pair is required")
        n0 = A @ x00 + q.b
        scale = _on_quadric_scale(w) * _on_quadric_scale(wh)
        if abs(w @ A @ wh) > tol * scale or abs(w @ n0) > tol * scale or abs(wh @ n0) > tol * scale:
            raise HypothesisError("w00 and its polar are not conjugate tangents")
        return scaled_residual((S @ w) @ (S @ wh), w @ wh)
    raise HypothesisError(f"Unknown identity: {name}")


def tangent_basis(normal: np.ndarray) -> np.ndarray:
    """Columns spanning {v : normal^T v = 0}"""
    return null_space(np.asarray(normal, dtype=complex)[None, :])


def reflection_pairing(basis: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> Tuple[float, float]:
    """Pairings of v1/|v1| + v2/|v2| and v1/|v1| - v2/|v2| against a tangent basis"""
    l1 = principal_sqrt(v1 @ v1)
    l2 = principal_sqrt(v2 @ v2)
    if abs(l1) <= 1e-14 or abs(l2) <= 1e-14:
        raise HypothesisError("segment of zero (or isotropic) length")
    plus = np.max(np.abs(basis.T @ (v1 / l1 + v2 / l2)))
    minus = np.max(np.abs(basis.T @ (v1 / l1 - v2 / l2)))
    return float(plus), float(minus)


def tc_discriminant(q: CanonicalQuadric, z_prime: complex, V: np.ndarray, N: np.ndarray) -> complex:
    """Discriminant in t of Q_{z'}(x + t V) for x on Q_0 with normal N"""
    A = q.A.realize()
    Rinv = np.linalg.inv(r_matrix(q, z_prime))
    return complex((V @ Rinv @ N) ** 2 - z_prime * (V @ A @ Rinv @ V) * (N @ Rinv @ N))


class VertexReport(BaseModel):
    """Reflection and collinearity at an Ivory-transported vertex"""
    model_config = ConfigDict(frozen=True)

    reflect_at_xz0: bool
    reflect_at_x00: bool
    collinear: bool
    discriminant_symmetry_residual: float
    pairing_xz0: float
    pairing_x00: float
    collinearity_residual: float


def _wedge_residual(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu <= 1e-12 or nv <= 1e-12:
        return 0.0
    return float(np.max(np.abs(np.outer(u, v) - np.outer(v, u))) / (nu * nv))


def vertex_configuration(
    q: CanonicalQuadric,
    z: complex,
    x00,
    x01,
    x02,
    z_primes: Optional[Sequence[complex]] = None,
    tol: float = 1e-8,
    rng: Optional[np.random.Generator] = None,
) -> VertexReport:
    """Vertex configuration of three points on Q_0 and the Ivory image of the first"""
    x00, x01, x02 = (np.asarray(v, dtype=complex) for v in (x00, x01, x02))
    for name, x in (("x00", x00), ("x01", x01), ("x02", x02)):
        _require_on_quadric(q, x, name, tol)
    A = q.A.realize()
    S = sqrt_sj(q.A, z)
    C = c_of_z(q, z)
    xz = [S @ x + C for x in (x00, x01, x02)]
    V01, V02 = xz[1] - x00, xz[2] - x00
    V10, V20 = xz[0] - x01, xz[0] - x02

    basis0 = tangent_basis(A @ x00 + q.b)
    basis_z = S @ basis0
    coincide = np.linalg.norm(x01 - x02) <= 1e-12 * _on_quadric_scale(x01)
    if coincide:
        pairing_0 = pairing_z = 0.0
    else:
        pairing_0 = min(reflection_pairing(basis0, V01, V02))
        pairing_z = min(reflection_pairing(basis_z, V10, V20))

    collinearity = _wedge_residual(V01, V02)

    rng = rng or np.random.default_rng(0)
    if z_primes is None:
        z_primes = rng.normal(size=4) + 1j * rng.normal(size=4)
    worst = 0.0
    for zp in z_primes:
        d0 = tc_discriminant(q, zp, V01, A @ x00 + q.b)
        d1 = tc_discriminant(q, zp, V10, A @ x01 + q.b)
        worst = max(worst, scaled_residual(d0, d1))

    return VertexReport(
        reflect_at_xz0=pairing_z < tol,
        reflect_at_x00=pairing_0 < tol,
        collinear=collinearity < tol,
        discriminant_symmetry_residual=worst,
        pairing_xz0=pairing_z,
        pairing_x00=pairing_0,
        collinearity_residual=collinearity,
    )


# Random sampling

def redraw(draw: Callable[[], object]):
    for attempt in Retrying(
        retry=retry_if_exception_type(HypothesisError),
        stop=stop_after_attempt(settings.max_redraws),
        reraise=True,
    ):
        with attempt:
            return draw()


def _complex_normal(rng: np.random.Generator, size=None):
    return rng.normal(size=size) + 1j * rng.normal(size=size)


def random_eigenvalue(rng: np.random.Generator) -> complex:
    radius = rng.uniform(0.3, 3.0)
    return complex(radius * np.exp(1j * rng.uniform(-np.pi, np.pi)))


def random_sj_matrix(rng: np.random.Generator, dim: int, max_block: int = 4) -> SJMatrix:
    """Blocks with random nonzero eigenvalues and sizes <= max_block"""
    sizes = []
    left = dim
    while left:
        size = int(rng.integers(1, min(max_block, left) + 1))
        sizes.append(size)
        left -= size
    return SJMatrix(blocks=tuple(SJBlock(eigenvalue=random_eigenvalue(rng), size=s) for s in sizes))


def random_canonical_quadric(
    rng: np.random.Generator, kind: str = "QC", dim: int = 3, max_block: int = 4
) -> CanonicalQuadric:
    if kind == "QC":
        A = random_sj_matrix(rng, dim, max_block)
        return CanonicalQuadric(A=A, B=(0.0,) * dim, C=-1.0, kind="QC")
    if kind == "QWC":
        rest = random_sj_matrix(rng, dim - 1, max_block)
        A = SJMatrix(blocks=rest.blocks + (SJBlock(eigenvalue=0.0, size=1),))
        B = np.zeros(dim, dtype=complex)
        B[-1] = -1.0
        return CanonicalQuadric(A=A, B=tuple(B), C=0.0, kind="QWC")
    if kind == "IQWC":
        p = int(rng.integers(2, min(max_block, dim) + 1))
        blocks = (SJBlock(eigenvalue=0.0, size=p),)
        if dim > p:
            blocks += random_sj_matrix(rng, dim - p, max_block).blocks
        B = np.zeros(dim, dtype=complex)
        B[:p] = -isotropic_vector(1, p, conjugate=True)
        return CanonicalQuadric(A=SJMatrix(blocks=blocks), B=tuple(B), C=0.0, kind="IQWC")
    raise ValueError(f"Unknown quadric kind: {kind}")


def random_parameter(rng: np.random.Generator, q: CanonicalQuadric, radius: float = 2.0) -> complex:
    """Complex z away from the branch poles 1 - z a = 0"""

    def draw() -> complex:
        z = complex(radius * np.sqrt(rng.uniform()) * np.exp(1j * rng.uniform(-np.pi, np.pi)))
        for block in q.A.blocks:
            if abs(1.0 - z * block.eigenvalue) < 0.1:
                raise HypothesisError("parameter too close to a branch pole", z=z)
        return z

    return redraw(draw)


def sample_point(q: CanonicalQuadric, rng: np.random.Generator, bound: float = 1e3) -> np.ndarray:
    """Point on Q_0: draw all but one coordinate, solve the quadratic for the last"""
    A = q.A.realize()
    k = int(np.argmax(np.abs(np.diag(A))))

    def draw() -> np.ndarray:
        x = _complex_normal(rng, q.dim)
        x[k] = 0.0
        alpha = A[k, k]
        beta = A[k] @ x + q.b[k]
        gamma = x @ A @ x + 2 * q.b @ x + q.C
        if abs(alpha) > 1e-6:
            t = (-beta + principal_sqrt(beta * beta - alpha * gamma) * rng.choice([-1, 1])) / alpha
        elif abs(beta) > 1e-6:
            t = -gamma / (2 * beta)
        else:
            raise HypothesisError("degenerate coordinate quadratic")
        x[k] = t
        if np.linalg.norm(x) > bound:
            raise HypothesisError("sample too large", norm=float(np.linalg.norm(x)))
        return x

    return redraw(draw)


def sample_ruling(q: CanonicalQuadric, x, rng: np.random.Generator) -> np.ndarray:
    """Ruling through x: tangent w with w^T A w = 0"""
    if q.dim < 3:
        raise HypothesisError("rulings need dimension >= 3", dim=q.dim)
    A = q.A.realize()
    basis = tangent_basis(A @ np.asarray(x, dtype=complex) + q.b)

    def draw() -> np.ndarray:
        v1 = basis @ _complex_normal(rng, basis.shape[1])
        v2 = basis @ _complex_normal(rng, basis.shape[1])
        a, b, c = v2 @ A @ v2, v1 @ A @ v2, v1 @ A @ v1
        if abs(a) < 1e-8:
            raise HypothesisError("isotropic direction in the tangent plane")
        t = (-b + principal_sqrt(b * b - a * c)) / a
        w = v1 + t * v2
        if np.linalg.norm(w) > 1e3:
            raise HypothesisError("ruling too large")
        return w / np.linalg.norm(w)

    return redraw(draw)


def sample_polar_pair(q: CanonicalQuadric, x, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Tangent vectors w, w_hat at x with w^T A w_hat = 0"""
    if q.dim < 3:
        raise HypothesisError("conjugate tangents need dimension >= 3", dim=q.dim)
    A = q.A.realize()
    n0 = A @ np.asarray(x, dtype=complex) + q.b
    basis = tangent_basis(n0)
    w = basis @ _complex_normal(rng, basis.shape[1])
    conj = null_space(np.vstack([n0, A @ w]))
    if conj.shape[1] == 0:
        raise HypothesisError("no conjugate tangent")
    wh = conj @ _complex_normal(rng, conj.shape[1])
    return w, wh


def sample_identity(q: CanonicalQuadric, rng: np.random.Generator) -> IdentitySample:
    x00 = sample_point(q, rng)
    x01 = sample_point(q, rng)
    if q.dim < 3:
        return IdentitySample(x00=x00, x01=x01)
    w00 = sample_ruling(q, x00, rng)
    w01 = sample_ruling(q, x01, rng)
    return IdentitySample(x00=x00, x01=x01, w00=w00, w01=w01)


def sample_polar_identity(q: CanonicalQuadric, rng: np.random.Generator) -> IdentitySample:
    x00 = sample_point(q, rng)
    w, wh = sample_polar_pair(q, x00, rng)
    return IdentitySample(x00=x00, x01=x00, w00=w, w00_polar=wh)


def sample_reflection_configuration(
    q: CanonicalQuadric, z: complex, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points x00, x01, x02 on Q_0 whose segments to x_z^0 touch Q_0 and reflect in Q_z.

    x01 is drawn on the polar hyperplane of x_z^0, so x_z^0 - x01 is tangent at
    x01; the segment is reflected in Q_z at x_z^0 and x02 is where the
    reflected line touches Q_0 again.
    """
    A = q.A.realize()

    def draw():
        x00 = sample_point(q, rng)
        xz = ivory_map(q, z, x00)
        polar = A @ xz + q.b
        offset = q.b @ xz + q.C
        # a point on the polar hyperplane polar^T x + offset = 0
        k = int(np.argmax(np.abs(polar)))
        base = _complex_normal(rng, q.dim)
        base[k] = 0.0
        base[k] = -(polar @ base + offset) / polar[k]
        directions = null_space(polar[None, :])
        d = directions @ _complex_normal(rng, directions.shape[1])
        a2, b2, c2 = d @ A @ d, d @ (A @ base + q.b), eval_Qz(q, 0.0, base)
        if abs(a2) < 1e-8:
            raise HypothesisError("isotropic direction in the polar hyperplane")
        t = (-b2 + principal_sqrt(b2 * b2 - a2 * c2)) / a2
        x01 = base + t * d

        w1 = xz - x01
        nz = normal_z(q, z, xz)
        nn = nz @ nz
        if abs(nn) < 1e-8:
            raise HypothesisError("isotropic normal at the vertex")
        w2 = w1 - 2 * (w1 @ nz) / nn * nz
        alpha = w2 @ A @ w2
        if abs(alpha) < 1e-8:
            raise HypothesisError("reflected direction is asymptotic")
        t2 = -(w2 @ (A @ xz + q.b)) / alpha
        x02 = xz + t2 * w2
        if max(np.linalg.norm(x01), np.linalg.norm(x02)) > 1e3:
            raise HypothesisError("configuration too large")
        return x00, x01, x02

    return redraw(draw)
