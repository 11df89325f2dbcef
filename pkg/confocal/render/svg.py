"""
SVG 1.1 output: conics as adaptive polylines, threads colored by segment
kind, y axis pointing down and a viewBox fitted with a 5% margin.
"""

from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from confocal.errors import EmptySceneError

PREAMBLE = """\
<?xml version="1.0" standalone="no"?>
<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN"
"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">
<svg viewBox="%(x).6f %(y).6f %(width).6f %(height).6f" version="1.1"
    xmlns="http://www.w3.org/2000/svg">
<rect x="%(x).6f" y="%(y).6f" width="%(width).6f" height="%(height).6f" style="fill:#ffffff"/>
"""

POSTAMBLE = "</svg>\n"

COLORS = {
    "rectilinear": "#1f77b4",
    "geodesic": "#2ca02c",
    "curvature": "#d62728",
    "conic": "#555555",
    "caustic": "#9467bd",
}


class Conic(BaseModel):
    """Centered ellipse x = R (s1 cos t, s2 sin t) with semi-axes s1, s2"""
    model_config = ConfigDict(frozen=True)

    semi_axes: Tuple[float, float]
    rotation: float = 0.0
    role: str = "conic"


class Polyline(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: Tuple[Tuple[float, ...], ...]
    kind: str = "rectilinear"
    closed: bool = False

    @field_validator("points")
    @classmethod
    def check_points(cls, points: Tuple[Tuple[float, ...], ...]) -> Tuple[Tuple[float, ...], ...]:
        if not points:
            raise ValueError("polyline needs at least one point")
        if len({len(p) for p in points}) != 1 or len(points[0]) not in (2, 3):
            raise ValueError("polyline points must all be planar or all spatial")
        return points


class Projection(BaseModel):
    """Orthographic view from azimuth and elevation (radians)"""
    model_config = ConfigDict(frozen=True)

    azimuth: float = 0.6
    elevation: float = 0.4

    def basis(self) -> np.ndarray:
        ca, sa = np.cos(self.azimuth), np.sin(self.azimuth)
        ce, se = np.cos(self.elevation), np.sin(self.elevation)
        right = np.array([-sa, ca, 0.0])
        up = np.array([-se * ca, -se * sa, ce])
        return np.vstack([right, up])


class Scene(BaseModel):
    """Planar scene, or a spatial one with a projection"""
    model_config = ConfigDict(frozen=True)

    conics: Tuple[Conic, ...] = ()
    polylines: Tuple[Polyline, ...] = ()
    ellipsoids: Tuple[Tuple[float, float, float], ...] = ()
    projection: Optional[Projection] = None


def adaptive_curve(
    f: Callable[[float], np.ndarray],
    t0: float,
    t1: float,
    tol: float = 1e-3,
    depth: int = 18,
) -> List[np.ndarray]:
    """Polyline of a parametric curve whose chords stay within tol of the curve"""
    def refine(a, pa, b, pb, level):
        mid = 0.5 * (a + b)
        pm = f(mid)
        quarter = (f(0.5 * (a + mid)), f(0.5 * (mid + b)))
        chord_gap = max(
            np.linalg.norm(pm - 0.5 * (pa + pb)),
            np.linalg.norm(quarter[0] - 0.5 * (pa + pm)),
            np.linalg.norm(quarter[1] - 0.5 * (pm + pb)),
        )
        if chord_gap <= tol or level >= depth:
            return [pa]
        return refine(a, pa, mid, pm, level + 1) + refine(mid, pm, b, pb, level + 1)

    knots = np.linspace(t0, t1, 9)
    pts = [f(t) for t in knots]
    out = []
    for i in range(8):
        out += refine(knots[i], pts[i], knots[i + 1], pts[i + 1], 0)
    out.append(pts[-1])
    return out


def conic_points(conic: Conic, tol: float = 1e-3) -> List[np.ndarray]:
    s1, s2 = conic.semi_axes
    c, s = np.cos(conic.rotation), np.sin(conic.rotation)
    rot = np.array([[c, -s], [s, c]])
    return adaptive_curve(lambda t: rot @ np.array([s1 * np.cos(t), s2 * np.sin(t)]), 0.0, 2.0 * np.pi, tol)


def ellipsoid_outline(semi_axes_sq: Sequence[float], projection: Projection) -> Conic:
    """Silhouette of sum x_j^2 / c_j = 1 under the orthographic projection"""
    basis = projection.basis()
    shadow = basis @ np.diag(np.asarray(semi_axes_sq, dtype=float)) @ basis.T
    values, vectors = np.linalg.eigh(shadow)
    rotation = float(np.arctan2(vectors[1, 1], vectors[0, 1]))
    return Conic(semi_axes=(float(np.sqrt(values[1])), float(np.sqrt(values[0]))), rotation=rotation)


class SVGDocument:
    """Accumulates drawing commands and the bounding box of what they draw"""

    def __init__(self):
        self.min_x = self.max_x = self.min_y = self.max_y = None
        self.commands: List[str] = []

    def require(self, x: float, y: float) -> None:
        if self.min_x is None:
            self.min_x = self.max_x = x
            self.min_y = self.max_y = y
        else:
            self.min_x = min(self.min_x, x)
            self.max_x = max(self.max_x, x)
            self.min_y = min(self.min_y, y)
            self.max_y = max(self.max_y, y)

    def path(self, points: Sequence[Sequence[float]], color: str, width: float, closed: bool = False) -> None:
        # world y up, SVG y down
        flipped = [(float(p[0]), -float(p[1])) for p in points]
        for x, y in flipped:
            self.require(x, y)
        body = " L ".join("%.6f,%.6f" % item for item in flipped)
        self.commands.append(
            '<path d="M %s%s" style="fill:none;stroke:%s;stroke-width:%.6f"/>'
            % (body, " Z" if closed else "", color, width)
        )

    def render(self) -> str:
        if self.min_x is None:
            raise EmptySceneError("nothing to draw")
        span = max(self.max_x - self.min_x, self.max_y - self.min_y, 1e-12)
        pad = 0.05 * span
        box = {
            "x": self.min_x - pad,
            "y": self.min_y - pad,
            "width": self.max_x - self.min_x + 2 * pad,
            "height": self.max_y - self.min_y + 2 * pad,
        }
        return PREAMBLE % box + "\n".join(self.commands) + "\n" + POSTAMBLE


def render_svg(scene: Scene, tol: float = 1e-3) -> str:
    """SVG document of a scene"""
    if not (scene.conics or scene.polylines or scene.ellipsoids):
        raise EmptySceneError("scene has no conics, ellipsoids or polylines")
    projection = scene.projection
    if scene.ellipsoids and projection is None:
        projection = Projection()
    basis = projection.basis() if projection is not None else None

    doc = SVGDocument()
    width = 0.004 * _extent(scene, basis)
    conics = list(scene.conics) + [ellipsoid_outline(e, projection) for e in scene.ellipsoids]
    for conic in conics:
        doc.path(conic_points(conic, tol), COLORS.get(conic.role, COLORS["conic"]), width, closed=True)
    for line in scene.polylines:
        pts = np.asarray(line.points, dtype=float)
        if pts.shape[1] == 3:
            pts = pts @ (basis if basis is not None else Projection().basis()).T
        doc.path(pts, COLORS.get(line.kind, COLORS["rectilinear"]), 1.5 * width, line.closed)
    return doc.render()


def _extent(scene: Scene, basis: Optional[np.ndarray]) -> float:
    sizes = [max(c.semi_axes) for c in scene.conics]
    sizes += [float(np.sqrt(max(e))) for e in scene.ellipsoids]
    for line in scene.polylines:
        sizes.append(float(np.max(np.abs(np.asarray(line.points, dtype=float)))))
    return max(sizes) if sizes else 1.0


def write_svg(scene: Scene, path: str) -> None:
    with open(path, "w") as f:
        f.write(render_svg(scene))
