from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.forest import ForestKindEnum

REPORT_FORMAT_VERSION = 1


class ReportFormatEnum(str, Enum):
    JSON = "json"
    CSV = "csv"
    ROC = "roc"


class RocCurve(BaseModel):
    """
    Curva ROC com contagens inteiras por threshold.

    O primeiro ponto é sempre (0, 0) com threshold +inf.
    """
    model_config = ConfigDict(frozen=True)

    fpr: Tuple[float, ...]
    tpr: Tuple[float, ...]
    thresholds: Tuple[float, ...]
    fp_counts: Tuple[int, ...]
    tp_counts: Tuple[int, ...]
    positives: int = Field(..., ge=1)
    negatives: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_shape(self) -> "RocCurve":
        n = len(self.fpr)
        if not (len(self.tpr) == len(self.thresholds) == len(self.fp_counts) == len(self.tp_counts) == n):
            raise ValueError("arrays da curva com tamanhos diferentes")
        if n < 2 or self.fpr[0] != 0.0 or self.tpr[0] != 0.0:
            raise ValueError("curva deve começar em (0,0)")
        if self.fpr[-1] != 1.0 or self.tpr[-1] != 1.0:
            raise ValueError("curva deve terminar em (1,1)")
        return self

    def points(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.fpr, self.tpr, self.thresholds))


class FprEntry(BaseModel):
    """
    Métricas de um modelo em um FPR alvo.

    `unachievable` marca a célula quando nenhum threshold atinge o alvo.
    """
    target_fpr: float = Field(..., gt=0.0, lt=1.0)
    unachievable: bool = False
    threshold: Optional[float] = None
    achieved_fpr: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    tpr: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    normalized_partial_auc: float = Field(..., ge=0.0, le=1.0)
    detection_rates: Dict[str, float] = Field(default_factory=dict)

    @field_validator("detection_rates")
    @classmethod
    def check_rates(cls, value: Dict[str, float]) -> Dict[str, float]:
        for name, rate in value.items():
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"taxa de detecção fora de [0,1] para {name}")
        return value


class EvalReport(BaseModel):
    """
    Resultado de avaliação de um modelo treinado em um split de teste.
    """
    model_id: str
    dataset_id: str
    full_auc: float = Field(..., ge=0.0, le=1.0)
    entries: List[FprEntry]
    generated_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))

    def entry(self, target_fpr: float) -> FprEntry:
        for e in self.entries:
            if e.target_fpr == target_fpr:
                return e
        raise KeyError(target_fpr)


class ExperimentCell(BaseModel):
    """
    Uma linha da grade: baseline ou modelo retreinado com um conjunto.
    """
    name: str
    augmentation: Optional[str] = None
    report: Optional[EvalReport] = None
    error: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.report is not None


class EvalMatrix(BaseModel):
    """
    Grade completa baseline × retreinos, serializada como JSON versionado.
    """
    format_version: int = REPORT_FORMAT_VERSION
    model_kind: ForestKindEnum
    target_fprs: List[float]
    adversarial_sets: List[str]
    cells: List[ExperimentCell]

    @property
    def succeeded(self) -> int:
        return sum(1 for c in self.cells if c.succeeded)


class AdversarialSetSpec(BaseModel):
    """
    Conjunto adversarial do manifesto: arquivo externo ou gerado.
    """
    name: str = Field(..., min_length=1)
    path: Optional[Path] = None
    generator: Optional[Literal["charbot", "random"]] = None
    seed_date: Optional[str] = Field(default=None, examples=["2018-12-04"])
    seed: Optional[int] = None
    count: int = Field(default=10_000, ge=1)

    @model_validator(mode="after")
    def check_source(self) -> "AdversarialSetSpec":
        if (self.path is None) == (self.generator is None):
            raise ValueError(f"conjunto '{self.name}': informe exatamente um entre path e generator")
        return self


class ExperimentManifest(BaseModel):
    """
    Manifesto declarativo (YAML) de um experimento.
    """
    name: str = "experiment"
    model_kind: ForestKindEnum = ForestKindEnum.BRF
    benign_path: Path
    benign_format: Literal["alexa", "list"] = "alexa"
    benign_limit: int = Field(default=1_000_000, ge=1)
    benign_min_sld_len: int = Field(default=1, ge=1)
    malicious_path: Optional[Path] = None
    malicious_generator: Optional[Literal["random"]] = None
    malicious_count: int = Field(default=1_000_000, ge=1)
    malicious_seed: int = 1
    charbot_source_limit: int = Field(default=10_000, ge=1)
    charbot_min_sld_len: int = Field(default=6, ge=1)
    train_fraction: float = Field(default=0.8, gt=0.0, lt=1.0)
    split_seed: int = 7
    forest_seed: int = 42
    brf_trees: int = Field(default=100, ge=1)
    target_fprs: List[float] = Field(default_factory=lambda: [0.001, 0.01])
    augmentations: List[AdversarialSetSpec] = Field(default_factory=list)
    adversarial_tests: List[AdversarialSetSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_manifest(self) -> "ExperimentManifest":
        if (self.malicious_path is None) == (self.malicious_generator is None):
            raise ValueError("informe exatamente um entre malicious_path e malicious_generator")
        if any(not 0.0 < f < 1.0 for f in self.target_fprs):
            raise ValueError("target_fprs devem estar em (0, 1)")
        # Sementes de treino e teste precisam ser disjuntas por gerador
        train_seeds = {(a.generator, a.seed_date, a.seed) for a in self.augmentations if a.generator}
        for t in self.adversarial_tests:
            if t.generator and (t.generator, t.seed_date, t.seed) in train_seeds:
                raise ValueError(f"conjunto de teste '{t.name}' reutiliza a semente de um conjunto de treino")
        return self
