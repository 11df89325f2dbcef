"""Experiment configuration and report schemas"""

import json
import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

REPORT_SCHEMA = "report_v1"


class ExperimentConfig(BaseModel):
    """Experiment name, raw parameters, seed and output target"""
    experiment: str
    params: Dict[str, Any] = {}
    output: Optional[str] = None
    seed: Optional[int] = None


class SampleRecord(BaseModel):
    """One sample of an experiment sweep"""
    index: int
    values: Dict[str, Any]
    deviation: float


class Statistics(BaseModel):
    """Summary of sample deviations"""
    model_config = ConfigDict(populate_by_name=True)

    mean: float
    stddev: float
    max_abs_dev: float
    tolerance: float
    pass_: bool = Field(alias="pass")


class Provenance(BaseModel):
    """Version and seed that reproduce a report"""
    version: str
    seed: int
    wall_time: Optional[float] = None


class ExperimentReport(BaseModel):
    """Result of one experiment run"""
    model_config = ConfigDict(populate_by_name=True)

    schema_: str = Field(default=REPORT_SCHEMA, alias="schema")
    experiment: str
    params: Dict[str, Any]
    samples: List[SampleRecord]
    statistics: Statistics
    provenance: Provenance
    error: Optional[Dict[str, Any]] = None

    @property
    def passed(self) -> bool:
        return self.statistics.pass_

    def to_json(self) -> str:
        return encode_json(self.model_dump(by_alias=True, exclude_none=True))


def _encode(value: Any, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return "null"
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    if hasattr(value, "tolist"):
        return _encode(value.tolist(), indent, level)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in value.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in value]
        return "[" + pad + ("," + pad).join(items) + end + "]"
    return json.dumps(str(value))


def encode_json(value: Any, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits"""
    return _encode(value, indent, 0) + "\n"
