"""
Algebraic identity sweeps: the Ivory theorem on real and complex confocal
families, orthogonality of the confocal quadrics through a point, and the
identities around the complex Ivory map.
"""

from typing import List, Literal, Tuple

import numpy as np
import structlog
from pydantic import Field

from confocal.errors import HypothesisError
from confocal.experiments.base import BaseExperiment, ExperimentParams
from confocal.geometry.core import ivory_affinity, principal_frame
from confocal.geometry.elliptic import to_cartesian, to_elliptic
from confocal.geometry.sj_complex import (
    Identity,
    IdentitySample,
    check_identity,
    random_canonical_quadric,
    random_parameter,
    redraw,
    sample_identity,
    sample_point,
    sample_polar_identity,
    sample_reflection_configuration,
    vertex_configuration,
)
from confocal.schemas.geometry import ConfocalFamily

logger = structlog.get_logger()

KINDS = ("QC", "QWC", "IQWC")


def random_axes(rng: np.random.Generator, dim: int) -> Tuple[float, ...]:
    """Strictly decreasing positive axes with gaps of at least 0.1"""
    gaps = rng.uniform(0.1, 2.0, size=dim)
    return tuple(float(v) for v in np.cumsum(gaps)[::-1])


def point_on_ellipsoid(rng: np.random.Generator, axes) -> np.ndarray:
    direction = rng.normal(size=len(axes))
    direction /= np.linalg.norm(direction)
    return np.sqrt(np.asarray(axes, dtype=float)) * direction


def real_ivory_deviation(rng: np.random.Generator, dim: int) -> Tuple[float, float]:
    axes = random_axes(rng, dim)
    family = ConfocalFamily(axes=axes)
    z = float(rng.uniform(-3.0, 0.9 * axes[-1]))
    x00 = point_on_ellipsoid(rng, axes)
    x01 = point_on_ellipsoid(rng, axes)
    v01 = ivory_affinity(family, 0.0, z, x01) - x00
    v10 = ivory_affinity(family, 0.0, z, x00) - x01
    lhs, rhs = v01 @ v01, v10 @ v10
    return z, float(abs(lhs - rhs) / max(1.0, lhs, rhs))


class IvoryParams(ExperimentParams):
    count: int = Field(default=1000, ge=1)
    max_dim: int = Field(default=6, ge=2, le=8)
    max_block: int = Field(default=4, ge=1)
    tol: float = Field(default=1e-10, gt=0)


class IvoryExperiment(BaseExperiment):
    """|V_0^1|^2 = |V_1^0|^2 on real families in the plane and space and on complex families"""

    name = "ivory-check"
    params_model = IvoryParams
    csv_columns = ("family", "dim", "z")

    def run(self):
        p = self.params
        for i in range(p.count):
            branch = i % 3
            if branch < 2:
                dim = branch + 2
                z, deviation = real_ivory_deviation(self.rng, dim)
                self.record(deviation, family="real", dim=dim, z=z)
                continue
            kind = KINDS[(i // 3) % len(KINDS)]
            dim = int(self.rng.integers(2, p.max_dim + 1))
            q = random_canonical_quadric(self.rng, kind, dim, p.max_block)
            z = random_parameter(self.rng, q)
            sample = IdentitySample(x00=sample_point(q, self.rng), x01=sample_point(q, self.rng))
            deviation = check_identity(Identity.IVORY, sample, q, z)
            self.record(deviation, family=kind, dim=dim, z=[z.real, z.imag])
        return self.records


class LameParams(ExperimentParams):
    axes: Tuple[float, float, float] = (3.0, 2.0, 1.0)
    count: int = Field(default=10000, ge=1)
    radius: float = Field(default=3.0, gt=0)
    tol: float = Field(default=1e-9, gt=0)


class LameExperiment(BaseExperiment):
    """Pairwise orthogonality of the three confocal quadrics through random points.

    Each point also goes through its elliptic coordinates and back.
    """

    name = "lame-orthogonality"
    params_model = LameParams
    csv_columns = ("u1", "u2", "u3", "orthogonality", "round_trip")

    def sample(self) -> np.ndarray:
        # keep off the coordinate planes, where the chart degenerates
        while True:
            x = self.rng.normal(size=3) * self.params.radius
            if np.min(np.abs(x)) > 1e-3 * self.params.radius:
                return x

    def run(self):
        p = self.params
        family = ConfocalFamily(axes=p.axes)
        for _ in range(p.count):
            x = self.sample()
            _, normals = principal_frame(family, x)
            gram = normals @ normals.T
            orthogonality = float(np.max(np.abs(gram - np.eye(3))))
            point = to_elliptic(p.axes, x)
            back = to_cartesian(p.axes, point)
            round_trip = float(np.linalg.norm(back - x)) / max(1.0, float(np.linalg.norm(x)))
            u1, u2, u3 = point.u
            self.record(
                max(orthogonality, round_trip),
                u1=u1,
                u2=u2,
                u3=u3,
                orthogonality=orthogonality,
                round_trip=round_trip,
            )
        return self.records


class SJParams(ExperimentParams):
    identities: List[Identity] = Field(
        default=[
            Identity.HENRICI,
            Identity.TC,
            Identity.SEGMENT_RULING,
            Identity.RULING_RULING,
            Identity.POLAR_RULINGS,
            Identity.KEY_LEMMA,
        ],
        min_length=1,
    )
    kinds: List[Literal["QC", "QWC", "IQWC"]] = Field(default=list(KINDS), min_length=1)
    count: int = Field(default=1000, ge=1)
    min_dim: int = Field(default=3, ge=3)
    max_dim: int = Field(default=6, ge=3, le=8)
    max_block: int = Field(default=4, ge=1)
    vertex_samples: int = Field(default=0, ge=0)
    tol: float = Field(default=1e-10, gt=0)


class SJExperiment(BaseExperiment):
    """Identities of the complex Ivory map on random symmetric Jordan families"""

    name = "sj-check"
    params_model = SJParams
    csv_columns = ("identity", "kind", "dim")

    def _draw(self, identity: Identity, kind: str, dim: int):
        q = random_canonical_quadric(self.rng, kind, dim, self.params.max_block)
        z = random_parameter(self.rng, q)
        if identity is Identity.POLAR_RULINGS:
            sample = sample_polar_identity(q, self.rng)
        else:
            sample = sample_identity(q, self.rng)
        return check_identity(identity, sample, q, z)

    def _draw_vertex(self, kind: str, dim: int) -> float:
        q = random_canonical_quadric(self.rng, kind, dim, self.params.max_block)
        z = random_parameter(self.rng, q)
        x00, x01, x02 = sample_reflection_configuration(q, z, self.rng)
        report = vertex_configuration(q, z, x00, x01, x02, rng=self.rng)
        return max(
            report.pairing_xz0,
            min(report.pairing_x00, report.collinearity_residual),
            report.discriminant_symmetry_residual,
        )

    def run(self):
        p = self.params
        if p.min_dim > p.max_dim:
            raise HypothesisError("min_dim exceeds max_dim", min_dim=p.min_dim, max_dim=p.max_dim)
        for identity in p.identities:
            for i in range(p.count):
                kind = p.kinds[i % len(p.kinds)]
                dim = int(self.rng.integers(p.min_dim, p.max_dim + 1))
                deviation = redraw(lambda: self._draw(identity, kind, dim))
                self.record(deviation, identity=identity.value, kind=kind, dim=dim)
        for i in range(p.vertex_samples):
            kind = p.kinds[i % len(p.kinds)]
            dim = int(self.rng.integers(p.min_dim, p.max_dim + 1))
            deviation = redraw(lambda: self._draw_vertex(kind, dim))
            self.record(deviation, identity="vertex_configuration", kind=kind, dim=dim)
        logger.debug("sj_check_done", samples=len(self.records))
        return self.records
