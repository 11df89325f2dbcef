"""Geodesic experiments on a triaxial ellipsoid"""

from typing import List, Optional, Tuple

import numpy as np
import structlog
from pydantic import Field

from confocal.errors import NotFound
from confocal.experiments.base import BaseExperiment, ExperimentParams
from confocal.geometry.geodesics import (
    GeodesicPath,
    cartesian_geodesic,
    integrate_geodesic,
    jacobi_constant,
    phi_gradient_norm,
    solved_closed_geodesic,
)
from confocal.render.svg import Polyline, Scene
from confocal.schemas.geometry import CharacteristicRadical, EllipticPoint, GeodesicState, WindingCounts

logger = structlog.get_logger()


class GeodesicParams(ExperimentParams):
    axes: Tuple[float, float, float] = (3.0, 2.0, 1.0)
    u2_0: float = 1.5
    u3_0: float = 0.0
    phi1: float = 0.3
    phi2: float = 0.2
    length: float = Field(default=20.0, gt=0)
    checkpoints: int = Field(default=41, ge=2)
    gradient_points: int = Field(default=1000, ge=1)


class GeodesicExperiment(BaseExperiment):
    """Conservation checks along one geodesic plus |grad Phi| = 1 at random points.

    Checks: the Jacobi constant, unit Cartesian speed, agreement with the
    Cartesian geodesic equation, and the eikonal equation of the distance
    function.
    """

    name = "geodesic"
    params_model = GeodesicParams
    csv_columns = ("check", "s")

    def __init__(self, params, rng):
        super().__init__(params, rng)
        self.path: Optional[GeodesicPath] = None

    def run(self):
        p = self.params
        rad = CharacteristicRadical(axes=p.axes, u2_0=p.u2_0, u3_0=p.u3_0)
        start = GeodesicState(rad=rad, phi1=p.phi1, phi2=p.phi2, sigma1=1)
        path = integrate_geodesic(start, p.length)
        self.path = path
        cartesian = cartesian_geodesic(p.axes, p.u3_0, path.point_at(0.0), path.velocity_at(0.0), p.length)
        diameter = 2.0 * np.sqrt(p.axes[0] - p.u3_0)

        for s in np.linspace(0.0, p.length, p.checkpoints):
            s = float(s)
            self.record(jacobi_constant(path.state_at(s), start), check="jacobi", s=s)
            self.record(float(np.linalg.norm(path.velocity_at(s))) - 1.0, check="speed", s=s)
            gap = float(np.linalg.norm(cartesian(s)[:3] - path.point_at(s))) / diameter
            self.record(gap, check="cartesian", s=s)

        a1, a2, a3 = p.axes
        for _ in range(p.gradient_points):
            u1 = float(self.rng.uniform(a2, a1))
            u2 = float(self.rng.uniform(a3, p.u2_0))
            u3 = float(p.u3_0 - self.rng.uniform(0.0, a1 - a3))
            point = EllipticPoint(u=(u1, u2, u3))
            self.record(phi_gradient_norm(rad, point) - 1.0, check="phi_gradient", s=None)
        return self.records

    def scene(self) -> Optional[Scene]:
        if self.path is None:
            return None
        p = self.params
        return Scene(
            ellipsoids=(tuple(np.asarray(p.axes) - p.u3_0),),
            polylines=(Polyline(points=tuple(map(tuple, self.path.points)), kind="geodesic"),),
        )


class ClosedGeodesicParams(ExperimentParams):
    axes: Tuple[float, float, float] = (3.0, 2.0, 1.0)
    u3_0: float = 0.0
    candidates: List[Tuple[int, int]] = Field(default=[(4, 2), (2, 4), (6, 4), (4, 6)], min_length=1)


class ClosedGeodesicExperiment(BaseExperiment):
    """Solve the rationality condition for u2_0 and close the geodesic in Cartesian space.

    The deviation is the relative length error; a geodesic that fails to
    close contributes its closure gap instead.
    """

    name = "closed-geodesic"
    params_model = ClosedGeodesicParams
    csv_columns = ("n", "n_prime", "u2_0", "length", "closure_gap")

    def __init__(self, params, rng):
        super().__init__(params, rng)
        self.closed: List[Tuple[CharacteristicRadical, float]] = []

    def run(self):
        p = self.params
        for n, n_prime in p.candidates:
            w = WindingCounts(n=n, n_prime=n_prime, m=0)
            try:
                solution, report = solved_closed_geodesic(p.axes, p.u3_0, w)
            except NotFound as exc:
                logger.info("closed_geodesic_not_found", n=n, n_prime=n_prime, error=exc.message)
                continue
            if report.measured_length is None:
                deviation = abs(report.residual)
            else:
                length_error = abs(report.measured_length - report.predicted_length) / report.predicted_length
                deviation = length_error if report.closed else max(length_error, report.closure_gap)
            self.record(
                deviation,
                n=n,
                n_prime=n_prime,
                u2_0=solution.u2_0,
                length=report.predicted_length,
                closure_gap=report.closure_gap,
            )
            rad = CharacteristicRadical(axes=p.axes, u2_0=solution.u2_0, u3_0=p.u3_0)
            self.closed.append((rad, report.predicted_length))
        if not self.records:
            raise NotFound("no candidate winding counts give a closed geodesic", candidates=p.candidates)
        return self.records

    def scene(self) -> Optional[Scene]:
        if not self.closed:
            return None
        rad, length = self.closed[0]
        path = integrate_geodesic(GeodesicState(rad=rad, phi1=0.3, phi2=0.0, sigma1=1), length)
        return Scene(
            ellipsoids=(tuple(rad.a - rad.u3_0),),
            polylines=(Polyline(points=tuple(map(tuple, path.points)), kind="geodesic", closed=True),),
        )
