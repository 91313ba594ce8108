import ipaddress
import logging
import math
from collections import Counter
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from app.core.exceptions import (
    DatasetFeaturizationError,
    DgalabError,
    EmptyDataset,
    EmptyString,
    FeatureExtractionError,
    InvalidParameters,
    StringTooShort,
)
from app.core.prng import fnv1a_64
from app.crud import matrix as crud_matrix
from app.models.matrix import FeatureMatrix
from app.schemas.domain import Dataset, Domain
from app.schemas.features import (
    SCHEMAS,
    FeatureSchema,
    FeatureSchemaEnum,
    FeatureVector,
    NgramTable,
    NgramTables,
    TldContext,
)

logger = logging.getLogger('dgalab.features')

VOWELS = frozenset("aeiou")
LETTERS = frozenset("abcdefghijklmnopqrstuvwxyz")
CONSONANTS = LETTERS - VOWELS
DIGITS = frozenset("0123456789")
HEX_CHARS = DIGITS | frozenset("abcdef")


def _counts(s: str) -> Counter:
    if not s:
        raise EmptyString("string vazia")
    return Counter(s)


def char_ratio(s: str, charset: frozenset) -> float:
    return sum(1 for c in s if c in charset) / len(s) if s else 0.0


def run_ratio(s: str, charset: frozenset) -> float:
    """Soma dos comprimentos das sequências maximais (>= 2) de `charset`, sobre len(s)."""
    total = run = 0
    for c in s:
        if c in charset:
            run += 1
        else:
            if run >= 2:
                total += run
            run = 0
    if run >= 2:
        total += run
    return total / len(s) if s else 0.0


def _ngram_counts(s: str, n: int) -> Tuple[float, float]:
    counts = list(Counter(s[i:i + n] for i in range(len(s) - n + 1)).values())
    if not counts:
        return 0.0, 0.0
    return float(np.mean(counts)), float(np.std(counts))


class FeatureService:
    """
    Extração das features léxicas sob os esquemas FANCI, BRF e FULL.

    Todas as features operam sobre o sld, exceto as de comprimento,
    as de TLD e a razão de dígitos (sld + tld sem pontos).
    """

    # ================= PRIMITIVAS =================

    def entropy(self, s: str) -> float:
        counts = _counts(s)
        n = len(s)
        return max(0.0, -sum((c / n) * math.log2(c / n) for c in counts.values()))

    def gini_index(self, s: str) -> float:
        counts = _counts(s)
        n = len(s)
        return float(1.0 - sum((c / n) ** 2 for c in counts.values()))

    def classification_error(self, s: str) -> float:
        counts = _counts(s)
        return float(1.0 - max(counts.values()) / len(s))

    def ngram_median(self, s: str, table: NgramTable, circular: bool = False) -> float:
        """
        Mediana das frequências dos n-gramas de `s` (padrão da tabela para
        os não vistos). No modo circular entram os n-gramas que dão a volta.
        """
        minimum = 1 if circular else table.n
        if len(s) < minimum:
            raise StringTooShort(f"'{s}' tem menos de {minimum} caracteres para {table.n}-gramas")
        if circular:
            text = s + (s * table.n)[: table.n - 1]
            grams = [text[i:i + table.n] for i in range(len(s))]
        else:
            grams = [s[i:i + table.n] for i in range(len(s) - table.n + 1)]
        return float(np.median([table.frequency(g) for g in grams]))

    def build_ngram_table(self, benign: Dataset, n: int) -> NgramTable:
        """Frequências relativas dos n-gramas contíguos dos slds do corpus."""
        if n not in (2, 3):
            raise InvalidParameters(f"n deve ser 2 ou 3: {n}")
        if len(benign) == 0:
            raise EmptyDataset("corpus benigno vazio para a tabela de n-gramas")
        counts: Counter = Counter()
        for domain in benign.domains():
            sld = domain.sld
            counts.update(sld[i:i + n] for i in range(len(sld) - n + 1))
        total = sum(counts.values())
        if total == 0:
            raise EmptyDataset(f"nenhum {n}-grama no corpus '{benign.name}'")
        entries = {gram: count / total for gram, count in counts.items()}
        table = NgramTable(n=n, entries=entries, default_frequency=min(entries.values()) / 2)
        logger.info(f"Tabela de {n}-gramas: {len(entries)} entradas de {len(benign)} domínios")
        return table

    def build_tables(self, benign: Dataset, schema: FeatureSchema) -> NgramTables:
        return NgramTables(
            bigram=self.build_ngram_table(benign, 2) if schema.needs_ngram(2) else None,
            trigram=self.build_ngram_table(benign, 3) if schema.needs_ngram(3) else None,
        )

    # ================= COLUNAS =================

    def _columns(self, d: Domain, tables: NgramTables, ctx: TldContext) -> Dict[str, Callable[[], float]]:
        sld, tld = d.sld, d.tld
        full = d.render()
        dot_free = sld + tld.replace(".", "")
        last_tld = tld.rsplit(".", 1)[-1]
        labels = [sld]

        def median(n: int, circular: bool) -> float:
            table = tables.get(n)
            if table is None:
                raise InvalidParameters(f"tabela de {n}-gramas ausente")
            return self.ngram_median(sld, table, circular)

        def is_ip() -> float:
            try:
                ipaddress.IPv4Address(full)
                return 1.0
            except ValueError:
                return 0.0

        return {
            "domain_length": lambda: float(len(full)),
            "sld_length": lambda: float(len(sld)),
            "tld_length": lambda: float(len(tld)),
            "domain_unique_chars": lambda: float(len(set(dot_free))),
            "sld_unique_chars": lambda: float(len(set(sld))),
            "tld_unique_chars": lambda: float(len(set(tld) - {"."})),
            "has_malicious_tld": lambda: float(tld in ctx.malicious_tlds or last_tld in ctx.malicious_tlds),
            "has_valid_tld": lambda: float(last_tld in ctx.valid_tlds),
            "tld_hash": lambda: fnv1a_64(tld.encode()) / 2.0 ** 64,
            "contains_digits": lambda: float(any(c in DIGITS for c in sld)),
            "starts_with_digit": lambda: float(sld[0] in DIGITS),
            "underscore_ratio": lambda: sld.count("_") / len(sld),
            "symbol_ratio": lambda: 1.0 - char_ratio(sld, LETTERS),
            "hex_ratio": lambda: char_ratio(sld, HEX_CHARS),
            "digit_ratio": lambda: char_ratio(dot_free, DIGITS),
            "vowel_ratio": lambda: char_ratio(sld, VOWELS),
            "consonant_ratio": lambda: char_ratio(sld, CONSONANTS),
            "repeated_char_ratio": lambda: sum(1 for c in Counter(sld).values() if c >= 2) / len(set(sld)),
            "consecutive_consonant_ratio": lambda: run_ratio(sld, CONSONANTS),
            "consecutive_digit_ratio": lambda: run_ratio(sld, DIGITS),
            "sld_token_count": lambda: float(len([t for t in sld.split("-") if t])),
            "sld_digit_count": lambda: float(sum(1 for c in sld if c in DIGITS)),
            "entropy": lambda: self.entropy(sld),
            "gini_index": lambda: self.gini_index(sld),
            "classification_error": lambda: self.classification_error(sld),
            "ngram1_mean": lambda: _ngram_counts(sld, 1)[0],
            "ngram1_std": lambda: _ngram_counts(sld, 1)[1],
            "ngram2_mean": lambda: _ngram_counts(sld, 2)[0],
            "ngram2_std": lambda: _ngram_counts(sld, 2)[1],
            "ngram3_mean": lambda: _ngram_counts(sld, 3)[0],
            "ngram3_std": lambda: _ngram_counts(sld, 3)[1],
            "bigram_median": lambda: median(2, False),
            "trigram_median": lambda: median(3, False),
            "bigram_circle_median": lambda: median(2, True),
            "trigram_circle_median": lambda: median(3, True),
            "subdomain_count": lambda: float(len(labels)),
            "subdomain_length_mean": lambda: float(np.mean([len(label) for label in labels])),
            "has_www_prefix": lambda: float(labels[0] == "www"),
            "has_single_char_subdomain": lambda: float(any(len(label) == 1 for label in labels)),
            "is_exclusive_prefix_repetition": lambda: float(len(labels) >= 2 and len(set(labels)) == 1),
            "contains_tld_as_subdomain": lambda: float(any(label in ctx.valid_tlds for label in labels)),
            "digit_subdomain_ratio": lambda: sum(1 for label in labels if label.isdigit()) / len(labels),
            "hex_subdomain_ratio": lambda: sum(1 for label in labels if set(label) <= HEX_CHARS) / len(labels),
            "contains_ip_address": is_ip,
            "alphabet_cardinality": lambda: float(len(set(sld))),
        }

    def extract(
        self,
        d: Domain,
        schema: FeatureSchema,
        tables: Optional[NgramTables] = None,
        tld_ctx: Optional[TldContext] = None,
    ) -> FeatureVector:
        """
        Vetor de features de um domínio, na ordem de colunas do esquema.

        Raises:
            FeatureExtractionError: nomeando a coluna que falhou
        """
        schema = FeatureSchema.of(schema.name if isinstance(schema, FeatureSchema) else schema)
        columns = self._columns(d, tables or NgramTables(), tld_ctx or TldContext())
        values = []
        for name in schema.column_names:
            try:
                values.append(float(columns[name]()))
            except (EmptyString, StringTooShort, InvalidParameters) as e:
                raise FeatureExtractionError(name, d.render(), e) from e
        return FeatureVector(schema_name=schema.name, values=tuple(values))

    def featurize_dataset(
        self,
        ds: Dataset,
        schema: FeatureSchema,
        tables: Optional[NgramTables] = None,
        tld_ctx: Optional[TldContext] = None,
        strict: bool = True,
        out: Optional[Path] = None,
    ) -> FeatureMatrix:
        """
        Matriz de features na ordem do dataset.

        Com strict=True as falhas por linha são agregadas em um único
        DatasetFeaturizationError; com strict=False as linhas com falha
        são descartadas com aviso.
        """
        schema = FeatureSchema.of(schema.name if isinstance(schema, FeatureSchema) else schema)
        rows: List[Tuple[float, ...]] = []
        labels: List[int] = []
        domains: List[str] = []
        tags: List[str] = []
        errors: List[Tuple[int, str]] = []
        for idx, example in enumerate(ds.examples):
            try:
                fv = self.extract(example.domain, schema, tables, tld_ctx)
            except DgalabError as e:
                errors.append((idx, e.message))
                continue
            rows.append(fv.values)
            labels.append(int(example.label))
            domains.append(example.domain.render())
            tags.append(example.source_tag)

        if errors:
            if strict:
                raise DatasetFeaturizationError(errors)
            logger.warning(f"{len(errors)} linhas de '{ds.name}' descartadas na extração")

        if rows:
            X = np.asarray(rows, dtype=np.float64)
        else:
            X = np.zeros((0, schema.width), dtype=np.float64)
        result = FeatureMatrix(schema.name, X, np.asarray(labels, dtype=np.int64), domains, tags)
        logger.debug(f"'{ds.name}': {result.rows} linhas x {schema.width} colunas ({schema.name.value})")
        if out is not None:
            crud_matrix.save(out, result)
        return result

    def schema(self, name: FeatureSchemaEnum) -> FeatureSchema:
        return SCHEMAS[FeatureSchemaEnum(name)]


feature_service = FeatureService()
