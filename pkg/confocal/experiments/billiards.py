"""
Billiard experiments: Poncelet polygons about an ellipse, closed spatial
billiards tangent to an ellipsoid and a hyperboloid, and the dual polygon
obtained through the Ivory affinity.
"""

from typing import List, Optional, Tuple

import numpy as np
import structlog
from pydantic import Field

from confocal.errors import ConfocalError, NotFound
from confocal.experiments.base import BaseExperiment, ExperimentParams
from confocal.geometry.billiards import (
    build_polygon,
    chasles_polygon_2d,
    dualize_polygon,
    poncelet_parameter,
    poncelet_perimeter,
    reflect_in_quadric,
    thread_reflection_residuals,
)
from confocal.geometry.core import tangency_spectrum
from confocal.geometry.quadrature import darboux_residuals, perimeter_formula, solve_closure
from confocal.geometry.threads import pen_point
from confocal.render.svg import Conic, Polyline, Scene
from confocal.schemas.geometry import (
    CharacteristicRadical,
    ConfocalFamily,
    Line,
    PolygonalThread,
    WindingCounts,
)

logger = structlog.get_logger()


def set_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance from a point of either set to the other set"""
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def count_mismatch(measured: WindingCounts, predicted: WindingCounts) -> int:
    """Largest difference between measured and predicted winding counts"""
    return max(
        abs(measured.n - predicted.n),
        abs(measured.n_prime - predicted.n_prime),
        abs(measured.m - predicted.m),
    )


def polygon_scene(poly: PolygonalThread, conics: Tuple[Conic, ...] = (), ellipsoids=()) -> Scene:
    return Scene(
        conics=conics,
        ellipsoids=ellipsoids,
        polylines=(Polyline(points=tuple(v.point for v in poly.vertices), closed=poly.closed),),
    )


class Chasles2DParams(ExperimentParams):
    axes: Tuple[float, float] = (2.0, 1.0)
    n: int = Field(default=2, ge=2)
    m: int = Field(default=3, ge=3)
    starts: int = Field(default=64, ge=1)


class Chasles2DExperiment(BaseExperiment):
    """Poncelet polygons about the ellipse Q_0 close and share one perimeter"""

    name = "chasles-2d"
    params_model = Chasles2DParams
    csv_columns = ("theta", "perimeter", "closure_gap")

    def __init__(self, params, rng):
        super().__init__(params, rng)
        self.z: Optional[float] = None
        self.polygons: List[PolygonalThread] = []

    def run(self):
        p = self.params
        z = poncelet_parameter(p.axes, p.n, p.m)
        self.z = z
        predicted = poncelet_perimeter(p.axes, z, p.n, p.m)
        scale = 2.0 * np.sqrt(p.axes[0] - z)
        logger.info("poncelet_parameter_found", z=z, perimeter=predicted)
        for theta in np.linspace(0.0, 2.0 * np.pi, p.starts, endpoint=False):
            poly = chasles_polygon_2d(p.axes, [z], float(theta), laps=p.m)
            self.polygons.append(poly)
            deviation = max(abs(poly.perimeter - predicted) / predicted, poly.closure_gap / scale)
            self.record(deviation, theta=float(theta), perimeter=poly.perimeter, closure_gap=poly.closure_gap)
        return self.records

    def scene(self) -> Optional[Scene]:
        if not self.polygons:
            return None
        a1, a2 = self.params.axes
        conics = (
            Conic(semi_axes=(np.sqrt(a1), np.sqrt(a2)), role="caustic"),
            Conic(semi_axes=(np.sqrt(a1 - self.z), np.sqrt(a2 - self.z))),
        )
        return polygon_scene(self.polygons[0], conics)


class Darboux3DParams(ExperimentParams):
    axes: Tuple[float, float, float] = (3.0, 2.0, 1.0)
    alternative_axes: List[Tuple[float, float, float]] = [(4.0, 2.5, 1.0)]
    u3_0: float = 0.0
    candidates: List[Tuple[int, int, int]] = Field(
        default=[(6, 8, 40), (6, 8, 60), (2, 2, 4)],
        min_length=1,
    )
    starts: int = Field(default=32, ge=1)
    grid_size: int = Field(default=32, ge=4)
    spectrum_lines: int = Field(default=1000, ge=0)
    tol: float = Field(default=1e-6, gt=0)


class Darboux3DExperiment(BaseExperiment):
    """Closed billiards in an ellipsoid with sides tangent to two confocal quadrics.

    First checks that reflection in a confocal ellipsoid preserves the pair
    of quadrics a line touches; then solves both rationality conditions for
    the first candidate counts that admit a solution, builds the billiard
    from a sweep of starting points and compares closure, winding counts and
    perimeter with the prediction.
    """

    name = "darboux-3d"
    params_model = Darboux3DParams
    csv_columns = ("check", "start", "perimeter", "closure_gap", "counts")

    def __init__(self, params, rng):
        super().__init__(params, rng)
        self.polygon: Optional[PolygonalThread] = None
        self.solution = None
        self.axes: Optional[Tuple[float, float, float]] = None

    def check_spectra(self) -> None:
        family = ConfocalFamily(axes=self.params.axes)
        a = family.a
        for _ in range(self.params.spectrum_lines):
            z = -float(self.rng.uniform(0.5, 3.0))
            direction = self.rng.normal(size=3)
            base = np.sqrt(a - z) * direction / np.linalg.norm(direction) * self.rng.uniform(0.0, 0.9)
            line = Line.through(base, self.rng.normal(size=3))
            before = tangency_spectrum(family, line).z
            _, reflected = reflect_in_quadric(family, z, line)
            after = tangency_spectrum(family, reflected).z
            if before.size != after.size:
                deviation = 1.0
            else:
                deviation = float(np.max(np.abs(np.sort(before) - np.sort(after)))) / max(1.0, float(np.max(np.abs(before))))
            self.record(deviation, check="spectrum", start=None, perimeter=None, closure_gap=None)

    def _closing_polygon(self, axes, rad: CharacteristicRadical, u3_1: float, w: WindingCounts, azimuth: float):
        """Closed billiard with the smallest closure gap among the tangent branches"""
        start = pen_point(rad, u3_1, azimuth)
        closed = []
        for branch in range(4):
            try:
                poly = build_polygon(axes, start, rad.u2_0, rad.u3_0, w.m, branch)
            except ConfocalError as exc:
                logger.debug("darboux_branch_failed", branch=branch, error=exc.message)
                continue
            if poly.closed:
                closed.append(poly)
        return min(closed, key=lambda p: p.closure_gap) if closed else None

    def _solve(self):
        p = self.params
        for axes in [p.axes, *p.alternative_axes]:
            for n, n_prime, m in p.candidates:
                w = WindingCounts(n=n, n_prime=n_prime, m=m)
                try:
                    solution = solve_closure(axes, p.u3_0, w, mode="darboux2", grid_size=p.grid_size)
                except NotFound as exc:
                    logger.info("darboux_not_found", axes=axes, counts=w.model_dump(), error=exc.message)
                    continue
                rad = CharacteristicRadical(axes=axes, u2_0=solution.u2_0, u3_0=p.u3_0)
                if self._closing_polygon(axes, rad, solution.u3_1, w, np.pi / p.starts) is None:
                    logger.info("darboux_unrealized", axes=axes, counts=w.model_dump())
                    continue
                return axes, rad, solution, w
        raise NotFound("no candidate winding counts close on any axes triple", candidates=p.candidates)

    def run(self):
        self.check_spectra()
        axes, rad, solution, w = self._solve()
        self.solution = solution
        self.axes = axes
        u3_1 = solution.u3_1
        predicted = perimeter_formula(rad, u3_1, w, variant="darb")
        diameter = 2.0 * np.sqrt(axes[0] - u3_1)
        logger.info("darboux_solved", axes=axes, counts=w.model_dump(), u2_0=rad.u2_0, u3_1=u3_1, perimeter=predicted)

        for k in range(self.params.starts):
            azimuth = 2.0 * np.pi * (k + 0.5) / self.params.starts
            poly = self._closing_polygon(axes, rad, u3_1, w, azimuth)
            if poly is None:
                self.record(1.0, check="polygon", start=k, perimeter=None, closure_gap=None)
                continue
            if self.polygon is None:
                self.polygon = poly
            # measured counts may be odd
            measured = WindingCounts.model_construct(n=poly.counts["n"], n_prime=poly.counts["n_prime"], m=poly.counts["m"])
            mismatch = count_mismatch(measured, w)
            if mismatch:
                logger.warning("darboux_counts_differ", start=k, measured=measured.model_dump(), predicted=w.model_dump())
            r1, r2 = darboux_residuals(rad, u3_1, measured)
            deviation = max(
                poly.closure_gap / diameter,
                abs(poly.perimeter - predicted) / predicted,
                abs(r1),
                abs(r2),
                float(mismatch),
            )
            self.record(
                deviation,
                check="polygon",
                start=k,
                perimeter=poly.perimeter,
                closure_gap=poly.closure_gap,
                counts=f"{measured.n},{measured.n_prime},{measured.m}",
            )
        return self.records

    def scene(self) -> Optional[Scene]:
        if self.polygon is None:
            return None
        a = np.asarray(self.axes, dtype=float)
        return polygon_scene(
            self.polygon,
            ellipsoids=(tuple(a - self.solution.u3_1), tuple(a - self.solution.u3_0)),
        )


class DualizeParams(ExperimentParams):
    axes: Tuple[float, float] = (2.0, 1.0)
    n: int = Field(default=2, ge=2)
    m: int = Field(default=3, ge=3)
    starts: int = Field(default=4, ge=1)
    iterations: int = Field(default=10, ge=1)
    tol: float = Field(default=1e-6, gt=0)


class DualizeExperiment(BaseExperiment):
    """Dualizing a closed Poncelet polygon keeps it closed, keeps its perimeter and has period two"""

    name = "dualize"
    params_model = DualizeParams
    csv_columns = ("start", "iteration", "perimeter", "reflection", "closure_gap", "distinct")

    def __init__(self, params, rng):
        super().__init__(params, rng)
        self.pair: List[PolygonalThread] = []
        self.z: Optional[float] = None

    def run(self):
        p = self.params
        z = poncelet_parameter(p.axes, p.n, p.m)
        self.z = z
        scale = 2.0 * np.sqrt(p.axes[0] - z)
        for k in range(p.starts):
            theta = 2.0 * np.pi * (k + 0.25) / p.starts
            current = chasles_polygon_2d(p.axes, [z], theta, laps=p.m)
            if not current.closed:
                raise NotFound("Poncelet polygon does not close", gap=current.closure_gap, theta=theta)
            perimeter = current.perimeter
            history = [current.vertex_array()]
            for it in range(1, p.iterations + 1):
                current = dualize_polygon(current, p.axes, tol=p.tol)
                if k == 0 and len(self.pair) < 2:
                    self.pair.append(current)
                vertices = current.vertex_array()
                reflection = max(thread_reflection_residuals(current, p.axes))
                period = set_distance(vertices, history[-2]) / scale if it >= 2 else 0.0
                history.append(vertices)
                distinct = 1 + sum(
                    all(set_distance(h, other) > 1e-9 * scale for other in history[:j])
                    for j, h in enumerate(history[1:], start=1)
                )
                deviation = max(
                    abs(current.perimeter - perimeter) / perimeter,
                    reflection,
                    period,
                    current.closure_gap / scale,
                )
                self.record(
                    deviation,
                    start=k,
                    iteration=it,
                    perimeter=current.perimeter,
                    reflection=reflection,
                    closure_gap=current.closure_gap,
                    distinct=int(distinct),
                )
        return self.records

    def scene(self) -> Optional[Scene]:
        if not self.pair:
            return None
        a1, a2 = self.params.axes
        conics = (
            Conic(semi_axes=(np.sqrt(a1), np.sqrt(a2)), role="caustic"),
            Conic(semi_axes=(np.sqrt(a1 - self.z), np.sqrt(a2 - self.z))),
        )
        return Scene(
            conics=conics,
            polylines=tuple(
                Polyline(points=tuple(v.point for v in poly.vertices), closed=True) for poly in self.pair
            ),
        )
