"""Instance containers shared by the generators."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..oracle import Oracle
from ..structured import StructuredFunction


@dataclass
class SampleSet:
    """``N`` sample rows with optional positive importance weights."""
    matrix: np.ndarray
    weights: Optional[np.ndarray] = None
    seed: Optional[int] = None
    description: str = ""

    def __post_init__(self):
        self.matrix = np.ascontiguousarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2:
            raise ValueError("sample matrix must be two-dimensional")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (self.matrix.shape[0],) or np.any(self.weights <= 0):
                raise ValueError("weights must be positive, one per sample row")

    @property
    def N(self):
        return self.matrix.shape[0]


@dataclass
class ProblemInstance:
    name: str
    oracle: Oracle
    g: StructuredFunction
    x0: np.ndarray
    metadata: dict = field(default_factory=dict)
    samples: Optional[SampleSet] = None
    params: dict = field(default_factory=dict)
    validation_samples: Optional[SampleSet] = None

    @property
    def n(self):
        return self.x0.size
