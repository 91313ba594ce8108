"""
Módulo de esquemas Pydantic do dgalab.
"""

from app.schemas.domain import (
    Domain, LabeledExample, Dataset, QueryLogRecord, LabelEnum, QueryResponseEnum
)
from app.schemas.charbot import (
    CharbotConfig, PerturbationRecord, DEFAULT_TLDS, DEFAULT_ALPHABET
)
from app.schemas.features import (
    FeatureSchema, FeatureSchemaEnum, FeatureVector, NgramTable, NgramTables, TldContext, SCHEMAS
)
from app.schemas.forest import CriterionEnum, ForestKindEnum, TrainConfig
from app.schemas.evaluation import (
    RocCurve, FprEntry, EvalReport, ExperimentCell, EvalMatrix, ExperimentManifest,
    AdversarialSetSpec, ReportFormatEnum
)
from app.schemas.defense import FilterBuildPlan, FilterHeader
from app.schemas.analysis import DensityCurve, LengthStats, FeatureComparison, CompareFeatureEnum
