from dataclasses import dataclass, field
from typing import List

import numpy as np

from app.schemas.features import SCHEMAS, FeatureSchemaEnum


@dataclass
class FeatureMatrix:
    """
    Matriz de features de um dataset: uma linha por domínio, na ordem do dataset.
    """
    schema_name: FeatureSchemaEnum
    X: np.ndarray
    y: np.ndarray
    domains: List[str] = field(default_factory=list)
    source_tags: List[str] = field(default_factory=list)

    def __post_init__(self):
        width = SCHEMAS[self.schema_name].width
        if self.X.ndim != 2 or self.X.shape[1] != width:
            self.X = self.X.reshape(-1, width)
        if len(self.y) != self.X.shape[0]:
            raise ValueError("rótulos e linhas com tamanhos diferentes")

    @property
    def rows(self) -> int:
        return int(self.X.shape[0])

    @classmethod
    def empty(cls, schema_name: FeatureSchemaEnum) -> "FeatureMatrix":
        width = SCHEMAS[schema_name].width
        return cls(schema_name, np.zeros((0, width)), np.zeros(0, dtype=np.int64))

    def take(self, idx: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            self.schema_name,
            self.X[idx],
            self.y[idx],
            [self.domains[i] for i in idx] if self.domains else [],
            [self.source_tags[i] for i in idx] if self.source_tags else [],
        )

    def concat(self, other: "FeatureMatrix") -> "FeatureMatrix":
        if other.schema_name != self.schema_name:
            raise ValueError("esquemas diferentes")
        return FeatureMatrix(
            self.schema_name,
            np.vstack([self.X, other.X]),
            np.concatenate([self.y, other.y]),
            self.domains + other.domains,
            self.source_tags + other.source_tags,
        )
