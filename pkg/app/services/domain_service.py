import logging
from collections import defaultdict
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

import numpy as np
from pydantic import ValidationError

from app.core.exceptions import DatasetIoError, EmptyDataset, InvalidParameters, MalformedDomain
from app.crud import corpus as crud_corpus
from app.schemas.domain import (
    SLD_CHARS,
    TLD_CHARS,
    Dataset,
    Domain,
    LabelEnum,
    LabeledExample,
    QueryLogRecord,
    QueryResponseEnum,
)

logger = logging.getLogger('dgalab.domain')

# Span mínimo (em dias) entre a primeira e a última resolução
WEAK_LABEL_MIN_SPAN_DAYS = 30


def _utc_day(ts: datetime) -> date:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).date()


class DomainService:
    """
    Parsing de domínios, ingestão dos corpora e rotulagem fraca.
    """

    def parse_domain(self, raw: str) -> Domain:
        """
        Separar no PRIMEIRO ponto: "foo.co.uk" vira sld "foo", tld "co.uk".

        Raises:
            MalformedDomain: sem ponto, rótulo vazio, caractere inválido
                ou hífen nas pontas do sld
        """
        text = raw.strip().lower()
        if "." not in text:
            raise MalformedDomain(raw, "sem ponto")
        sld, tld = text.split(".", 1)
        if not sld or not tld:
            raise MalformedDomain(raw, "rótulo vazio")
        if any(c not in SLD_CHARS for c in sld):
            raise MalformedDomain(raw, "caractere inválido no sld")
        if sld[0] == "-" or sld[-1] == "-":
            raise MalformedDomain(raw, "sld começa ou termina com hífen")
        if any(c not in TLD_CHARS for c in tld) or "" in tld.split("."):
            raise MalformedDomain(raw, "tld inválido")
        return Domain(sld=sld, tld=tld)

    def _collect(
        self,
        name: str,
        items: Iterable[Tuple[int, str]],
        label: LabelEnum,
        source_tag: str,
        min_sld_len: int = 1,
        limit: int = 0,
    ) -> Dataset:
        examples: List[LabeledExample] = []
        seen = set()
        skipped = 0
        for line_no, raw in items:
            try:
                domain = self.parse_domain(raw)
            except MalformedDomain as e:
                skipped += 1
                logger.debug(f"{name}:{line_no} ignorada ({e.reason})")
                continue
            if len(domain.sld) < min_sld_len:
                continue
            rendered = domain.render()
            if rendered in seen:
                continue
            seen.add(rendered)
            examples.append(LabeledExample(domain=domain, label=label, source_tag=source_tag))
            if limit and len(examples) >= limit:
                break

        if skipped:
            logger.warning(f"{skipped} linhas ilegíveis ignoradas em {name}")
        if not examples:
            raise EmptyDataset(f"Nenhum domínio aproveitável em '{name}'")
        logger.info(f"{len(examples)} domínios carregados de {name}")
        return Dataset(name=name, examples=tuple(examples))

    def load_alexa(self, path: Path, min_sld_len: int = 6, limit: int = 10_000) -> Dataset:
        """
        Carregar os `limit` domínios de melhor rank com |sld| >= min_sld_len.

        Linhas sem rank mantêm a ordem do arquivo.
        """
        rows = list(crud_corpus.read_ranked(path))
        # Ordenação estável: linhas com rank seguem o rank, as demais a ordem do arquivo
        if rows and all(rank is not None for _, rank, _ in rows):
            rows.sort(key=lambda r: r[1])
        items = ((line_no, raw) for line_no, _, raw in rows)
        return self._collect(path.name, items, LabelEnum.BENIGN, "alexa", min_sld_len, limit)

    def load_domain_list(self, path: Path, label: LabelEnum, source_tag: str) -> Dataset:
        return self._collect(path.name, crud_corpus.read_list(path), LabelEnum(label), source_tag)

    def load_query_log(self, path: Path) -> List[QueryLogRecord]:
        records: List[QueryLogRecord] = []
        skipped = 0
        for line_no, row in crud_corpus.read_query_log(path):
            try:
                domain, timestamp, response = row[:3]
                ts = datetime.fromisoformat(timestamp.replace("Z", "+00:00"))
                if ts.tzinfo is None:
                    ts = ts.replace(tzinfo=timezone.utc)
                records.append(
                    QueryLogRecord(domain=domain.lower(), timestamp=ts, response=QueryResponseEnum(response.upper()))
                )
            except (ValueError, ValidationError):
                skipped += 1
                logger.debug(f"{path.name}:{line_no} ignorada")
        if skipped:
            logger.warning(f"{skipped} linhas ilegíveis ignoradas em {path.name}")
        return records

    def weak_label(self, records: Iterable[QueryLogRecord], name: str = "weak-label") -> Dataset:
        """
        Rotular como benignos os domínios resolvidos ao menos duas vezes,
        nunca NXDOMAIN, com mais de 30 dias entre a primeira e a última
        resolução. Os demais são omitidos.
        """
        resolved: Dict[str, List[date]] = defaultdict(list)
        parsed: Dict[str, Domain] = {}
        nxdomain = set()
        unparseable = 0
        for record in records:
            try:
                domain = self.parse_domain(record.domain)
            except MalformedDomain:
                unparseable += 1
                continue
            rendered = domain.render()
            parsed[rendered] = domain
            if record.response == QueryResponseEnum.NXDOMAIN:
                nxdomain.add(rendered)
            else:
                resolved[rendered].append(_utc_day(record.timestamp))
        if unparseable:
            logger.warning(f"{unparseable} registros com domínio ilegível ignorados")

        examples = []
        for rendered in sorted(resolved):
            days = resolved[rendered]
            if rendered in nxdomain or len(days) < 2:
                continue
            if (max(days) - min(days)).days <= WEAK_LABEL_MIN_SPAN_DAYS:
                continue
            examples.append(LabeledExample(domain=parsed[rendered], label=LabelEnum.BENIGN, source_tag="weak-label"))

        logger.info(f"Rotulagem fraca: {len(examples)} de {len(resolved)} domínios resolvidos")
        return Dataset(name=name, examples=tuple(examples))

    def overlap_count(self, a: Dataset, b: Dataset) -> int:
        return len(set(a.rendered()) & set(b.rendered()))

    def merge(self, name: str, *datasets: Dataset) -> Dataset:
        """Concatenar datasets mantendo a primeira ocorrência de cada domínio."""
        seen = set()
        examples = []
        for ds in datasets:
            for example in ds.examples:
                rendered = example.domain.render()
                if rendered not in seen:
                    seen.add(rendered)
                    examples.append(example)
        return Dataset(name=name, examples=tuple(examples))

    def split_train_test(self, d: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
        """
        Split estratificado e determinístico.

        Cada classe é embaralhada com a mesma semente e cortada em
        round(n_classe * fração); a ordem original é preservada dentro
        de cada lado.
        """
        if not 0.0 < train_fraction < 1.0:
            raise InvalidParameters(f"train_fraction deve estar em (0, 1): {train_fraction}")

        rng = np.random.default_rng(seed)
        labels = np.asarray(d.labels(), dtype=np.int64)
        train_idx: List[int] = []
        for label in (LabelEnum.BENIGN, LabelEnum.MALICIOUS):
            idx = np.flatnonzero(labels == int(label))
            if idx.size == 0:
                continue
            idx = rng.permutation(idx)
            cut = int(round(idx.size * train_fraction))
            train_idx.extend(idx[:cut].tolist())

        train_set = set(train_idx)
        train = tuple(e for i, e in enumerate(d.examples) if i in train_set)
        test = tuple(e for i, e in enumerate(d.examples) if i not in train_set)
        if not train or not test:
            raise EmptyDataset(f"Split de '{d.name}' deixaria um dos lados vazio")
        return Dataset(name=f"{d.name}:train", examples=train), Dataset(name=f"{d.name}:test", examples=test)

    def write_dataset(self, path: Path, d: Dataset) -> int:
        try:
            return crud_corpus.write_list(path, d.rendered())
        except OSError as e:
            raise DatasetIoError(f"Erro ao gravar '{path}': {e}") from e


domain_service = DomainService()
