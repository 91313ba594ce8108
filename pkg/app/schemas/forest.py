from enum import Enum
from hashlib import sha256
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.features import FeatureSchemaEnum


class CriterionEnum(str, Enum):
    """
    Medida de impureza usada pela árvore.
    """
    GINI = "gini"
    ENTROPY = "entropy"


class ForestKindEnum(str, Enum):
    """
    Configurações de floresta suportadas.
    """
    FANCI = "fanci"
    BRF = "brf"

    @property
    def schema_name(self) -> FeatureSchemaEnum:
        return FeatureSchemaEnum.FANCI if self is ForestKindEnum.FANCI else FeatureSchemaEnum.BRF


class TrainConfig(BaseModel):
    """
    Hiperparâmetros de treino de uma floresta.

    `criteria` define o critério de cada árvore, na ordem.
    """
    model_config = ConfigDict(frozen=True)

    tree_count: int = Field(..., ge=1)
    criteria: Tuple[CriterionEnum, ...]
    min_features: int = Field(..., ge=1)
    max_features: int = Field(..., ge=1)
    bootstrap: bool = True
    max_depth: Optional[int] = Field(default=None, ge=1)
    min_samples_leaf: int = Field(default=1, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def check_bounds(self) -> "TrainConfig":
        if len(self.criteria) != self.tree_count:
            raise ValueError("um critério por árvore")
        if self.min_features > self.max_features:
            raise ValueError("min_features maior que max_features")
        return self

    @classmethod
    def fanci(cls, seed: int) -> "TrainConfig":
        """9 árvores: 7 Gini e 2 entropia, 2 a 18 features cada."""
        return cls(
            tree_count=9,
            criteria=(CriterionEnum.GINI,) * 7 + (CriterionEnum.ENTROPY,) * 2,
            min_features=2,
            max_features=18,
            seed=seed,
        )

    @classmethod
    def brf(cls, seed: int, width: int, tree_count: int = 100) -> "TrainConfig":
        """100 árvores por entropia, até 20 features cada."""
        size = min(20, width)
        return cls(
            tree_count=tree_count,
            criteria=(CriterionEnum.ENTROPY,) * tree_count,
            min_features=size,
            max_features=size,
            seed=seed,
        )

    def digest(self) -> str:
        return sha256(self.model_dump_json().encode()).hexdigest()[:16]
