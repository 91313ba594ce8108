from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class FilterBuildPlan(BaseModel):
    """
    Dimensionamento de um filtro de Bloom antes da construção.
    """
    model_config = ConfigDict(frozen=True)

    n_sources: int = Field(..., ge=0)
    mean_length: float = Field(..., ge=0.0)
    alphabet_size: int = Field(..., ge=2)
    edits: int = Field(..., ge=0)
    tld_count: int = Field(default=1, ge=1)
    include_indels: bool = False
    cumulative: bool = True
    predicted_insertions: int = Field(..., gt=0)
    target_fpr: float = Field(..., gt=0.0, lt=0.5)
    m_bits: int = Field(..., ge=8)
    hash_count: int = Field(..., ge=1)
    memory_budget_bytes: int = Field(..., ge=1)

    @property
    def size_bytes(self) -> int:
        return (self.m_bits + 7) // 8

    @property
    def feasible(self) -> bool:
        return self.size_bytes <= self.memory_budget_bytes


class FilterHeader(BaseModel):
    """
    Parâmetros gravados no cabeçalho do arquivo do filtro.
    """
    model_config = ConfigDict(frozen=True)

    version: int = 1
    m_bits: int = Field(..., ge=8)
    hash_count: int = Field(..., ge=1)
    inserted: int = Field(..., ge=0)
    edits: int = Field(..., ge=0)
    source_digest: str
    alphabet_digest: str
    include_original: bool = False
    include_indels: bool = False
    cumulative: bool = True
    target_fpr: Optional[float] = None
