"""Base experiment interface"""

from abc import ABC, abstractmethod
from typing import Any, List, Optional, Tuple, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from confocal.render.svg import Scene
from confocal.schemas.experiment import SampleRecord


class ExperimentParams(BaseModel):
    """Parameters shared by every experiment; unknown keys are rejected"""
    model_config = ConfigDict(extra="forbid")

    tol: float = Field(default=1e-8, gt=0)


class BaseExperiment(ABC):
    """Abstract base class for experiments"""

    name: str = ""
    params_model: Type[ExperimentParams] = ExperimentParams
    csv_columns: Tuple[str, ...] = ()

    def __init__(self, params: ExperimentParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng
        self.records: List[SampleRecord] = []

    @abstractmethod
    def run(self) -> List[SampleRecord]:
        """Produce the sample records, ordered by index"""
        pass

    def scene(self) -> Optional[Scene]:
        """Figure of the last run (override in subclass)"""
        return None

    def record(self, deviation: float, **values: Any) -> SampleRecord:
        sample = SampleRecord(index=len(self.records), values=values, deviation=float(deviation))
        self.records.append(sample)
        return sample
