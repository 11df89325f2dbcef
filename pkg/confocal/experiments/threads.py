"""Thread experiments: the string construction about an ellipse and Staude threads"""

from typing import List, Optional, Tuple

import numpy as np
import structlog
from pydantic import Field, model_validator

from confocal.errors import ClosureResidualError, InfeasibleThreadError
from confocal.experiments.base import BaseExperiment, ExperimentParams
from confocal.geometry.quadrature import critical_pen_parameter, curvature_budget, perimeter_formula
from confocal.geometry.threads import (
    assemble_staude_thread,
    graves_excess,
    graves_tangent_length,
    graves_vertex,
)
from confocal.render.svg import Conic, Polyline, Scene
from confocal.schemas.geometry import CharacteristicRadical, StaudeThread

logger = structlog.get_logger()


class GravesParams(ExperimentParams):
    a1: float = Field(default=2.0, gt=0)
    a2: float = Field(default=1.0, gt=0)
    z: float = Field(default=-1.0, lt=0)
    samples: int = Field(default=256, ge=1)
    random_sets: int = Field(default=9, ge=0)

    @model_validator(mode="after")
    def check_axes(self) -> "GravesParams":
        if self.a1 <= self.a2:
            raise ValueError("a1 must exceed a2")
        return self


class GravesExperiment(BaseExperiment):
    """Tangent lengths minus the enclosed arc stay constant along a confocal ellipse.

    One record per vertex angle. Its values describe the fixed parameter set;
    its deviation is the largest (excess - min excess) / mean tangent length
    over all sets, so the maximum deviation is the worst max - min spread.
    """

    name = "graves"
    params_model = GravesParams
    csv_columns = ("theta0", "excess", "tangent_length")

    def parameter_sets(self) -> List[Tuple[float, float, float]]:
        p = self.params
        sets = [(p.a1, p.a2, p.z)]
        for _ in range(p.random_sets):
            a2 = float(self.rng.uniform(0.2, 2.0))
            a1 = a2 + float(self.rng.uniform(0.1, 2.0))
            z = -float(self.rng.uniform(0.05, 3.0))
            sets.append((a1, a2, z))
        return sets

    def run(self):
        thetas = np.linspace(0.0, 2.0 * np.pi, self.params.samples, endpoint=False)
        spreads = []
        reference = None
        for k, (a1, a2, z) in enumerate(self.parameter_sets()):
            excess = np.array([graves_excess(a1, a2, z, t) for t in thetas])
            tangents = np.array([graves_tangent_length(graves_vertex(a1, a2, z, t)) for t in thetas])
            scale = float(np.mean(tangents))
            spreads.append((excess - np.min(excess)) / scale)
            if reference is None:
                reference = (excess, tangents)
            logger.debug("graves_set_done", set=k, a1=a1, a2=a2, z=z, spread=float(np.ptp(excess)) / scale)

        worst = np.max(spreads, axis=0)
        for t, e, length, deviation in zip(thetas, *reference, worst):
            self.record(deviation, theta0=float(t), excess=float(e), tangent_length=float(length))
        return self.records

    def scene(self) -> Scene:
        p = self.params
        vertex = graves_vertex(p.a1, p.a2, p.z, 0.4 * np.pi)
        c1, c2 = vertex.contacts
        x = vertex.vertex
        arc = [tuple(vertex.point(t)) for t in np.linspace(vertex.theta1, vertex.theta2, 129)]
        return Scene(
            conics=(
                Conic(semi_axes=(np.sqrt(p.a1), np.sqrt(p.a2)), role="caustic"),
                Conic(semi_axes=(np.sqrt(p.a1 - p.z), np.sqrt(p.a2 - p.z))),
            ),
            polylines=(
                Polyline(points=(tuple(c1), tuple(x), tuple(c2)), kind="rectilinear"),
                Polyline(points=tuple(arc), kind="geodesic"),
            ),
        )


class StaudeParams(ExperimentParams):
    axes: Tuple[float, float, float] = (3.0, 2.0, 1.0)
    u2_0: float = 1.5
    u3_0: float = 0.0
    u3_1: float = -0.5
    pen_u2: Optional[float] = None
    azimuths: int = Field(default=16, ge=1)
    split: float = Field(default=0.5, ge=0, le=1)
    tol: float = Field(default=1e-6, gt=0)


class StaudeExperiment(BaseExperiment):
    """Closed threads around an ellipsoid and a hyperboloid have one length for every pen position.

    An azimuth at which the assembly is infeasible counts as correct when
    the curvature budget of the pen ellipsoid is negative.
    """

    name = "staude"
    params_model = StaudeParams
    csv_columns = ("azimuth", "length", "budget", "feasible")

    def __init__(self, params, rng):
        super().__init__(params, rng)
        self.threads: List[StaudeThread] = []

    def run(self):
        p = self.params
        rad = CharacteristicRadical(axes=p.axes, u2_0=p.u2_0, u3_0=p.u3_0)
        predicted = perimeter_formula(rad, p.u3_1, variant="staud")
        expected_budget = curvature_budget(rad, p.u3_1)
        regime = critical_pen_parameter(rad)
        logger.info("staude_regime", regime=regime.regime, budget=expected_budget, length=predicted)

        for k in range(p.azimuths):
            azimuth = 2.0 * np.pi * (k + 0.5) / p.azimuths
            try:
                thread = assemble_staude_thread(p.axes, p.u2_0, p.u3_0, p.u3_1, azimuth, p.pen_u2, p.split)
            except InfeasibleThreadError as exc:
                deviation = 0.0 if expected_budget < 0 else 1.0
                logger.info("staude_infeasible", azimuth=azimuth, regime=exc.regime)
                self.record(deviation, azimuth=azimuth, length=None, budget=expected_budget, feasible=False)
                continue
            except ClosureResidualError as exc:
                logger.warning("staude_unclosed", azimuth=azimuth, error=exc.to_dict())
                self.record(1.0, azimuth=azimuth, length=None, budget=expected_budget, feasible=False)
                continue
            self.threads.append(thread)
            length_error = abs(thread.total_length - predicted) / predicted
            budget_error = abs(thread.curvature_budget - expected_budget) / max(1.0, abs(expected_budget))
            self.record(
                max(length_error, budget_error),
                azimuth=azimuth,
                length=thread.total_length,
                budget=thread.curvature_budget,
                feasible=True,
            )
        return self.records

    def scene(self) -> Optional[Scene]:
        if not self.threads:
            return None
        p = self.params
        thread = self.threads[0]
        a = np.asarray(p.axes)
        return Scene(
            ellipsoids=(tuple(a - p.u3_0), tuple(a - p.u3_1)),
            polylines=tuple(Polyline(points=piece.points, kind=piece.kind) for piece in thread.pieces),
        )
