import math
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class FeatureSchemaEnum(str, Enum):
    """
    Conjuntos de features disponíveis.
    """
    FANCI = "FANCI"
    BRF = "BRF"
    FULL = "FULL"


# Catálogo completo: (id da feature, nome da coluna). A linha 26 se expande
# em seis colunas (média e desvio das contagens de 1, 2 e 3-gramas).
FEATURE_CATALOG: Tuple[Tuple[int, str], ...] = (
    (1, "domain_length"),
    (2, "sld_length"),
    (3, "tld_length"),
    (4, "domain_unique_chars"),
    (5, "sld_unique_chars"),
    (6, "tld_unique_chars"),
    (7, "has_malicious_tld"),
    (8, "has_valid_tld"),
    (9, "tld_hash"),
    (10, "contains_digits"),
    (11, "starts_with_digit"),
    (12, "underscore_ratio"),
    (13, "symbol_ratio"),
    (14, "hex_ratio"),
    (15, "digit_ratio"),
    (16, "vowel_ratio"),
    (17, "consonant_ratio"),
    (18, "repeated_char_ratio"),
    (19, "consecutive_consonant_ratio"),
    (20, "consecutive_digit_ratio"),
    (21, "sld_token_count"),
    (22, "sld_digit_count"),
    (23, "entropy"),
    (24, "gini_index"),
    (25, "classification_error"),
    (26, "ngram1_mean"),
    (26, "ngram1_std"),
    (26, "ngram2_mean"),
    (26, "ngram2_std"),
    (26, "ngram3_mean"),
    (26, "ngram3_std"),
    (27, "bigram_median"),
    (28, "trigram_median"),
    (29, "bigram_circle_median"),
    (30, "trigram_circle_median"),
    (31, "subdomain_count"),
    (32, "subdomain_length_mean"),
    (33, "has_www_prefix"),
    (34, "has_single_char_subdomain"),
    (35, "is_exclusive_prefix_repetition"),
    (36, "contains_tld_as_subdomain"),
    (37, "digit_subdomain_ratio"),
    (38, "hex_subdomain_ratio"),
    (39, "contains_ip_address"),
    (40, "alphabet_cardinality"),
)

FANCI_FEATURES: FrozenSet[int] = frozenset({1, 8, 10, 12, 15, 16, 18, 19, 20, 23, 26, *range(31, 41)})
BRF_FEATURES: FrozenSet[int] = frozenset({1, 2, 3, 4, 5, 6, 7, 9, 11, *range(13, 26), 27, 28, 29, 30})

# Colunas com valor em [0, 1]
RATIO_COLUMNS: FrozenSet[str] = frozenset({
    "has_malicious_tld", "has_valid_tld", "tld_hash", "contains_digits", "starts_with_digit",
    "underscore_ratio", "symbol_ratio", "hex_ratio", "digit_ratio", "vowel_ratio",
    "consonant_ratio", "repeated_char_ratio", "consecutive_consonant_ratio",
    "consecutive_digit_ratio", "gini_index", "classification_error", "bigram_median",
    "trigram_median", "bigram_circle_median", "trigram_circle_median", "has_www_prefix",
    "has_single_char_subdomain", "is_exclusive_prefix_repetition", "contains_tld_as_subdomain",
    "digit_subdomain_ratio", "hex_subdomain_ratio", "contains_ip_address",
})

# Features que não discriminam nada em entradas SLD.TLD
DEGENERATE_COLUMNS: Tuple[str, ...] = (
    "subdomain_count",
    "has_www_prefix",
    "has_single_char_subdomain",
    "is_exclusive_prefix_repetition",
    "contains_tld_as_subdomain",
)


class FeatureSchema(BaseModel):
    """
    Esquema de colunas com ordem fixa e documentada.
    """
    model_config = ConfigDict(frozen=True)

    name: FeatureSchemaEnum
    columns: Tuple[Tuple[int, str], ...]

    @property
    def width(self) -> int:
        return len(self.columns)

    @property
    def column_names(self) -> List[str]:
        return [name for _, name in self.columns]

    @property
    def feature_ids(self) -> FrozenSet[int]:
        return frozenset(fid for fid, _ in self.columns)

    def needs_ngram(self, n: int) -> bool:
        names = set(self.column_names)
        prefix = "bigram" if n == 2 else "trigram"
        return any(c.startswith(prefix) for c in names)

    @classmethod
    def of(cls, name: FeatureSchemaEnum) -> "FeatureSchema":
        return SCHEMAS[FeatureSchemaEnum(name)]


def _build_schema(name: FeatureSchemaEnum, ids: Optional[FrozenSet[int]]) -> FeatureSchema:
    columns = tuple(col for col in FEATURE_CATALOG if ids is None or col[0] in ids)
    return FeatureSchema(name=name, columns=columns)


SCHEMAS: Dict[FeatureSchemaEnum, FeatureSchema] = {
    FeatureSchemaEnum.FANCI: _build_schema(FeatureSchemaEnum.FANCI, FANCI_FEATURES),
    FeatureSchemaEnum.BRF: _build_schema(FeatureSchemaEnum.BRF, BRF_FEATURES),
    FeatureSchemaEnum.FULL: _build_schema(FeatureSchemaEnum.FULL, None),
}


class FeatureVector(BaseModel):
    """
    Vetor numérico de um domínio sob um esquema.
    """
    model_config = ConfigDict(frozen=True)

    schema_name: FeatureSchemaEnum
    values: Tuple[float, ...]

    @model_validator(mode="after")
    def check_values(self) -> "FeatureVector":
        schema = SCHEMAS[self.schema_name]
        if len(self.values) != schema.width:
            raise ValueError(f"vetor com {len(self.values)} valores, esquema {self.schema_name.value} tem {schema.width}")
        for name, value in zip(schema.column_names, self.values):
            if not math.isfinite(value):
                raise ValueError(f"valor não finito na coluna {name}")
            if name in RATIO_COLUMNS and not 0.0 <= value <= 1.0:
                raise ValueError(f"coluna {name} fora de [0,1]: {value}")
        return self

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(SCHEMAS[self.schema_name].column_names, self.values))


class NgramTable(BaseModel):
    """
    Frequências relativas de n-gramas de um corpus benigno.
    """
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=2, le=3)
    entries: Dict[str, float]
    default_frequency: float = Field(..., ge=0.0)

    @model_validator(mode="after")
    def check_entries(self) -> "NgramTable":
        if any(f < 0.0 for f in self.entries.values()):
            raise ValueError("frequência negativa na tabela")
        return self

    def frequency(self, gram: str) -> float:
        return self.entries.get(gram, self.default_frequency)


class NgramTables(BaseModel):
    """
    Tabelas de 2 e 3-gramas usadas na extração.
    """
    model_config = ConfigDict(frozen=True)

    bigram: Optional[NgramTable] = None
    trigram: Optional[NgramTable] = None

    def get(self, n: int) -> Optional[NgramTable]:
        return self.bigram if n == 2 else self.trigram


class TldContext(BaseModel):
    """
    TLDs válidos (snapshot IANA) e TLDs considerados maliciosos.
    """
    model_config = ConfigDict(frozen=True)

    valid_tlds: FrozenSet[str] = frozenset()
    malicious_tlds: FrozenSet[str] = frozenset()

    @model_validator(mode="after")
    def check_sets(self) -> "TldContext":
        if "" in self.valid_tlds or "" in self.malicious_tlds:
            raise ValueError("TLD vazio no contexto")
        return self
