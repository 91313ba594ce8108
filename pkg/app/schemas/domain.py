from datetime import datetime
from enum import Enum
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Conjunto de caracteres válidos em DNS para o SLD
SLD_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz0123456789-")
TLD_CHARS = SLD_CHARS | {"."}


class LabelEnum(int, Enum):
    """
    Rótulo de um exemplo: 0 benigno, 1 malicioso (DGA).
    """
    BENIGN = 0
    MALICIOUS = 1


class QueryResponseEnum(str, Enum):
    """
    Resposta DNS registrada no log de consultas.
    """
    RESOLVED = "RESOLVED"
    NXDOMAIN = "NXDOMAIN"


class Domain(BaseModel):
    """
    Par SLD/TLD, unidade de todo o processamento.
    """
    model_config = ConfigDict(frozen=True)

    sld: str = Field(..., min_length=1, examples=["wikipedia"])
    tld: str = Field(..., min_length=1, examples=["org"])

    @model_validator(mode="after")
    def check_labels(self) -> "Domain":
        if any(c not in SLD_CHARS for c in self.sld):
            raise ValueError(f"sld com caractere inválido: '{self.sld}'")
        if self.sld.startswith("-") or self.sld.endswith("-"):
            raise ValueError(f"sld não pode começar ou terminar com '-': '{self.sld}'")
        if any(c not in TLD_CHARS for c in self.tld):
            raise ValueError(f"tld com caractere inválido: '{self.tld}'")
        return self

    def render(self) -> str:
        return f"{self.sld}.{self.tld}"

    def __str__(self) -> str:
        return self.render()


class LabeledExample(BaseModel):
    """
    Domínio rotulado com a origem (alexa, bambenek, charbot, external...).
    """
    model_config = ConfigDict(frozen=True)

    domain: Domain
    label: LabelEnum
    source_tag: str = Field(..., min_length=1, examples=["alexa"])


class Dataset(BaseModel):
    """
    Lista ordenada e deduplicada de exemplos rotulados.
    """
    model_config = ConfigDict(frozen=True)

    name: str
    examples: Tuple[LabeledExample, ...] = ()

    @model_validator(mode="after")
    def check_unique(self) -> "Dataset":
        seen = set()
        for example in self.examples:
            rendered = example.domain.render()
            if rendered in seen:
                raise ValueError(f"domínio duplicado no dataset '{self.name}': {rendered}")
            seen.add(rendered)
        return self

    def __len__(self) -> int:
        return len(self.examples)

    def domains(self) -> List[Domain]:
        return [e.domain for e in self.examples]

    def rendered(self) -> List[str]:
        return [e.domain.render() for e in self.examples]

    def labels(self) -> List[int]:
        return [int(e.label) for e in self.examples]

    def count(self, label: LabelEnum) -> int:
        return sum(1 for e in self.examples if e.label == label)


class QueryLogRecord(BaseModel):
    """
    Uma linha do log de consultas DNS (domain,timestamp,response).
    """
    model_config = ConfigDict(frozen=True)

    domain: str = Field(..., min_length=1, examples=["example.com"])
    timestamp: datetime = Field(..., examples=["2018-01-15T10:30:00Z"])
    response: QueryResponseEnum
