"""Geometric value types"""

from enum import Enum
from typing import ClassVar, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from confocal.config import settings
from confocal.errors import InterlacingError, SeparationError


class ConfocalFamily(BaseModel):
    """Real diagonal confocal family with center, axes a1 > ... > a_{n+1} > 0"""
    model_config = ConfigDict(frozen=True)

    axes: Tuple[float, ...]
    kind: str = "QC"

    @field_validator("axes")
    @classmethod
    def check_axes(cls, axes: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(axes) not in (2, 3):
            raise ValueError("families live in R^2 or R^3")
        if any(a <= 0 for a in axes):
            raise ValueError("axes must be positive")
        if any(axes[i] - axes[i + 1] <= settings.eps_sep for i in range(len(axes) - 1)):
            raise ValueError("axes must be strictly decreasing")
        return axes

    @field_validator("kind")
    @classmethod
    def check_kind(cls, kind: str) -> str:
        if kind != "QC":
            raise ValueError("real families are quadrics with center")
        return kind

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.axes, dtype=float)

    @property
    def dim(self) -> int:
        return len(self.axes)


class Line(BaseModel):
    """Line through base with unit direction"""
    model_config = ConfigDict(frozen=True)

    base: Tuple[float, ...]
    dir: Tuple[float, ...]

    @model_validator(mode="after")
    def check_unit(self) -> "Line":
        if len(self.base) != len(self.dir):
            raise ValueError("base and dir differ in dimension")
        if abs(float(np.linalg.norm(self.dir)) - 1.0) > 1e-12:
            raise ValueError("dir must be a unit vector")
        return self

    @classmethod
    def through(cls, base, direction) -> "Line":
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        return cls(base=tuple(float(v) for v in base), dir=tuple(float(v) for v in d))

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.base, dtype=float)

    @property
    def d(self) -> np.ndarray:
        return np.asarray(self.dir, dtype=float)

    def at(self, t: float) -> np.ndarray:
        return self.p + t * self.d


class Tangency(BaseModel):
    """One confocal member touched by a line"""
    model_config = ConfigDict(frozen=True)

    z: float
    t: float
    point: Tuple[float, ...]
    multiplicity: int = 1
    # z is an axis value: the member is a coordinate plane and has no contact point
    singular: bool = False


class TangencySpectrum(BaseModel):
    """Real parameters of the confocal quadrics tangent to a line"""
    model_config = ConfigDict(frozen=True)

    values: Tuple[Tangency, ...]
    complex_count: int = 0

    @property
    def z(self) -> np.ndarray:
        out = []
        for tg in self.values:
            out.extend([tg.z] * tg.multiplicity)
        return np.asarray(out, dtype=float)

    def contains(self, z: float, tol: float = 1e-7) -> bool:
        return any(abs(tg.z - z) <= tol * max(1.0, abs(z)) for tg in self.values)


class EllipticPoint(BaseModel):
    """Elliptic coordinates u1 > u2 > u3 with octant signs"""
    model_config = ConfigDict(frozen=True)

    u: Tuple[float, float, float]
    signs: Tuple[int, int, int] = (1, 1, 1)

    @field_validator("signs")
    @classmethod
    def check_signs(cls, signs: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(s not in (-1, 1) for s in signs):
            raise ValueError("signs must be +1 or -1")
        return signs

    def check_interlacing(self, axes: Tuple[float, ...], eps: Optional[float] = None) -> None:
        eps = settings.eps_sep if eps is None else eps
        a1, a2, a3 = axes
        u1, u2, u3 = self.u
        chain = (a1, u1, a2, u2, a3, u3)
        if any(chain[i] - chain[i + 1] <= eps for i in range(5)):
            raise InterlacingError("elliptic coordinates must interlace with the axes", u=self.u, axes=axes)


class ChartKind(str, Enum):
    U1_TO_A1 = "u1_to_a1"
    U1_TO_A2 = "u1_to_a2"
    U2_TO_A2 = "u2_to_a2"
    U2_TO_A3 = "u2_to_a3"
    U3_TO_A3 = "u3_to_a3"
    FOCAL_ELLIPSE = "focal_ellipse"
    FOCAL_HYPERBOLA = "focal_hyperbola"


class BoundaryChart(BaseModel):
    """Degenerate chart: one elliptic coordinate pinned to an axis value"""
    model_config = ConfigDict(frozen=True)

    which: ChartKind
    free: Tuple[float, ...]
    signs: Tuple[int, int, int] = (1, 1, 1)


class CharacteristicRadical(BaseModel):
    """Delta(u) = (u - u2_0)(u - u3_0) prod_j (a_j - u)"""
    model_config = ConfigDict(frozen=True)
    # sign of the leading coefficient of Delta
    kappa: ClassVar[float] = -1.0

    axes: Tuple[float, float, float]
    u2_0: float
    u3_0: float

    @model_validator(mode="after")
    def check_separation(self) -> "CharacteristicRadical":
        a1, a2, a3 = self.axes
        chain = (a1, a2, self.u2_0, a3, self.u3_0)
        eps = settings.eps_sep
        if any(chain[i] - chain[i + 1] <= eps for i in range(4)):
            raise SeparationError(
                "radical roots must satisfy a1 > a2 > u2_0 > a3 > u3_0",
                axes=self.axes, u2_0=self.u2_0, u3_0=self.u3_0,
            )
        return self

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.axes, dtype=float)

    @property
    def roots(self) -> np.ndarray:
        """All five roots, ascending"""
        return np.sort(np.array([*self.axes, self.u2_0, self.u3_0], dtype=float))

    def delta(self, u):
        u = np.asarray(u, dtype=float)
        a1, a2, a3 = self.axes
        return (u - self.u2_0) * (u - self.u3_0) * (a1 - u) * (a2 - u) * (a3 - u)

    def with_u2_0(self, u2_0: float) -> "CharacteristicRadical":
        return CharacteristicRadical(axes=self.axes, u2_0=u2_0, u3_0=self.u3_0)


class PlanarRadical(BaseModel):
    """Delta(u) = (u - z')(a1 - u)(u - a2), the planar analogue with caustic z'"""
    model_config = ConfigDict(frozen=True)
    kappa: ClassVar[float] = -1.0

    axes: Tuple[float, float]
    caustic: float = 0.0

    @model_validator(mode="after")
    def check_separation(self) -> "PlanarRadical":
        a1, a2 = self.axes
        if not (a1 - a2 > settings.eps_sep and a2 - self.caustic > settings.eps_sep):
            raise SeparationError("planar radical needs a1 > a2 > caustic", axes=self.axes, caustic=self.caustic)
        return self

    @property
    def roots(self) -> np.ndarray:
        return np.sort(np.array([*self.axes, self.caustic], dtype=float))

    def delta(self, u):
        u = np.asarray(u, dtype=float)
        a1, a2 = self.axes
        return (u - self.caustic) * (a1 - u) * (u - a2)


class WindingCounts(BaseModel):
    """Plane crossings n, hyperboloid tangencies n', vertices m"""
    model_config = ConfigDict(frozen=True)

    n: int
    n_prime: int
    m: int

    @model_validator(mode="after")
    def check_counts(self) -> "WindingCounts":
        if min(self.n, self.n_prime, self.m) < 0:
            raise ValueError("winding counts are nonnegative")
        if self.n % 2 or self.n_prime % 2:
            raise ValueError("n and n_prime must be even")
        return self

    def scaled(self, factor: int) -> "WindingCounts":
        return WindingCounts(n=self.n * factor, n_prime=self.n_prime * factor, m=self.m * factor)


class SignState(BaseModel):
    """Direction signs eps_k of du^k and octant signs"""
    model_config = ConfigDict(frozen=True)

    eps: Tuple[int, ...]
    sigma: Tuple[int, int, int] = (1, 1, 1)


class GeodesicState(BaseModel):
    """Point of a geodesic on the ellipsoid u3 = u3_0, in angle variables"""
    model_config = ConfigDict(frozen=True)

    rad: CharacteristicRadical
    phi1: float
    phi2: float
    sigma1: int = 1
    s: float = 0.0

    @property
    def u(self) -> Tuple[float, float]:
        a1, a2, a3 = self.rad.axes
        u1 = a2 + (a1 - a2) * np.sin(self.phi1) ** 2
        u2 = a3 + (self.rad.u2_0 - a3) * np.sin(self.phi2) ** 2
        return float(u1), float(u2)

    @property
    def signs(self) -> SignState:
        c1, s1 = np.cos(self.phi1), np.sin(self.phi1)
        c2, s2 = np.cos(self.phi2), np.sin(self.phi2)
        # du = (a1 - a2) sin(2 phi) dphi
        eps1 = int(np.sign(self.sigma1 * s1 * c1) or 1)
        eps2 = int(np.sign(s2 * c2) or 1)
        sigma = (int(np.sign(c1) or 1), int(np.sign(s1) or 1), int(np.sign(s2) or 1))
        return SignState(eps=(eps1, eps2), sigma=sigma)


class Vertex(BaseModel):
    """Polygon vertex and the parameter of its quadric"""
    model_config = ConfigDict(frozen=True)

    point: Tuple[float, ...]
    z: float


class Segment(BaseModel):
    """Typed piece of a thread with its sampled geometry"""
    model_config = ConfigDict(frozen=True)

    kind: str  # rectilinear, geodesic, curvature
    points: Tuple[Tuple[float, ...], ...]
    length: float
    tangencies: Tuple[Tuple[float, ...], ...] = ()

    @field_validator("kind")
    @classmethod
    def check_kind(cls, kind: str) -> str:
        if kind not in ("rectilinear", "geodesic", "curvature"):
            raise ValueError(f"Unknown segment kind: {kind}")
        return kind


class PolygonalThread(BaseModel):
    """Chain of typed segments with vertex bookkeeping"""
    model_config = ConfigDict(frozen=True)

    vertices: Tuple[Vertex, ...]
    segments: Tuple[Segment, ...]
    closed: bool = False
    closure_gap: float = float("nan")
    perimeter: float = 0.0
    signs: Tuple[Tuple[int, ...], ...] = ()
    caustics: Tuple[float, ...] = ()
    counts: Optional[Dict[str, int]] = None

    def vertex_array(self) -> np.ndarray:
        return np.array([v.point for v in self.vertices], dtype=float)


class GravesVertex(BaseModel):
    """Vertex x_z^0 on a confocal ellipse with its two tangency angles"""
    model_config = ConfigDict(frozen=True)

    a1: float
    a2: float
    z: float
    theta0: float
    theta1: float
    theta2: float

    def point(self, theta: float, z: float = 0.0) -> np.ndarray:
        return np.array([np.sqrt(self.a1 - z) * np.cos(theta), np.sqrt(self.a2 - z) * np.sin(theta)])

    @property
    def vertex(self) -> np.ndarray:
        return self.point(self.theta0, self.z)

    @property
    def contacts(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.point(self.theta1), self.point(self.theta2)


class StaudeThread(BaseModel):
    """Assembled closed thread stretched by a pen on the ellipsoid u3 = u3_1"""
    model_config = ConfigDict(frozen=True)

    rad: CharacteristicRadical
    u3_1: float
    pen: Tuple[float, float, float]
    pieces: Tuple[Segment, ...]
    total_length: float
    topology: str
    curvature_budget: float
    counts: Dict[str, int]

    def lengths(self) -> List[float]:
        return [p.length for p in self.pieces]
