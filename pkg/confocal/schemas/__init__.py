"""Pydantic schemas for geometric values and experiment records"""

from confocal.schemas.geometry import (
    ConfocalFamily,
    Line,
    Tangency,
    TangencySpectrum,
    EllipticPoint,
    BoundaryChart,
    CharacteristicRadical,
    PlanarRadical,
    WindingCounts,
    SignState,
    GeodesicState,
    Vertex,
    Segment,
    PolygonalThread,
    GravesVertex,
    StaudeThread,
)
from confocal.schemas.algebra import SJBlock, SJMatrix, CanonicalQuadric
from confocal.schemas.experiment import (
    ExperimentConfig,
    SampleRecord,
    Statistics,
    Provenance,
    ExperimentReport,
)

__all__ = [
    "ConfocalFamily",
    "Line",
    "Tangency",
    "TangencySpectrum",
    "EllipticPoint",
    "BoundaryChart",
    "CharacteristicRadical",
    "PlanarRadical",
    "WindingCounts",
    "SignState",
    "GeodesicState",
    "Vertex",
    "Segment",
    "PolygonalThread",
    "GravesVertex",
    "StaudeThread",
    "SJBlock",
    "SJMatrix",
    "CanonicalQuadric",
    "ExperimentConfig",
    "SampleRecord",
    "Statistics",
    "Provenance",
    "ExperimentReport",
]
