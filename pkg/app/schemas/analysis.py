from enum import Enum
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CompareFeatureEnum(str, Enum):
    """
    Features comparadas por KDE entre corpora.
    """
    ENTROPY = "Entropy"
    GINI = "Gini"
    BIGRAM_MEDIAN = "2gramMedian"
    TRIGRAM_MEDIAN = "3gramMedian"
    SYMBOL_RATIO = "SymbolRatio"
    CONSEC_CONSONANT_RATIO = "ConsecConsonantRatio"


class DensityCurve(BaseModel):
    """
    Densidade estimada (kernel gaussiano) sobre uma grade uniforme.
    """
    model_config = ConfigDict(frozen=True)

    feature: str
    dataset: str
    grid: Tuple[float, ...]
    densities: Tuple[float, ...]
    bandwidth: float = Field(..., gt=0.0)

    @model_validator(mode="after")
    def check_curve(self) -> "DensityCurve":
        if len(self.grid) != len(self.densities):
            raise ValueError("grade e densidades com tamanhos diferentes")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grade deve ser crescente")
        if any(d < 0.0 for d in self.densities):
            raise ValueError("densidade negativa")
        return self


class LengthStats(BaseModel):
    """
    Média e desvio (populacional) do comprimento dos domínios.
    """
    model_config = ConfigDict(frozen=True)

    dataset: str
    mean: float
    std: float = Field(..., ge=0.0)
    count: int = Field(..., ge=1)


class FeatureComparison(BaseModel):
    """
    Curvas por (dataset, feature) e falhas registradas por curva.
    """
    curves: List[DensityCurve] = Field(default_factory=list)
    failures: Dict[str, str] = Field(default_factory=dict)
    # valor único das distribuições sem variância, por "dataset:feature"
    point_masses: Dict[str, float] = Field(default_factory=dict)

    def curve(self, dataset: str, feature: str) -> DensityCurve:
        for c in self.curves:
            if c.dataset == dataset and c.feature == feature:
                return c
        raise KeyError((dataset, feature))
