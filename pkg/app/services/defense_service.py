import itertools
import logging
import math
from enum import Enum
from hashlib import sha256
from typing import Iterator, List, Optional, Sequence, Tuple

from app.core.exceptions import InfeasiblePlan, InvalidParameters, SourceTooShort
from app.models.bloom import TyposquatFilter
from app.schemas.charbot import DEFAULT_ALPHABET
from app.schemas.defense import FilterBuildPlan, FilterHeader
from app.schemas.domain import Domain
from app.services.charbot_service import charbot_service

logger = logging.getLogger('dgalab.defense')

DEFAULT_MEMORY_BUDGET = 1 << 30

# Variantes acumuladas antes de cada lote de hashing
INSERT_BATCH = 200_000


class CheckResultEnum(str, Enum):
    HIT = "HIT"
    MISS = "MISS"


def _bloom_size(n: int, p: float) -> Tuple[int, int]:
    """m_bits = ⌈−N·ln p / (ln 2)²⌉ e h = ⌈(m_bits/N)·ln 2⌉."""
    m_bits = max(8, math.ceil(-n * math.log(p) / (math.log(2) ** 2)))
    hash_count = max(1, math.ceil((m_bits / n) * math.log(2)))
    return m_bits, hash_count


def _elementary_symmetric(weights: Sequence[int], k: int) -> List[int]:
    """[e_0, ..., e_k] de (w_1, ..., w_n); e_j soma os produtos de j pesos distintos."""
    e = [1] + [0] * k
    for w in weights:
        for j in range(k, 0, -1):
            e[j] += e[j - 1] * w
    return e


def edit_distances(k: int, cumulative: bool = True) -> range:
    """Distâncias de Hamming enumeradas: 1..k (ou só k); k=0 é o próprio sld."""
    if k == 0 or not cumulative:
        return range(k, k + 1)
    return range(1, k + 1)


class DefenseService:
    """
    Detecção de domínios próximos de slds protegidos: enumeração exata
    das variantes em um filtro de Bloom, com varredura linear como
    oráculo exato.
    """

    def _check_sources(self, sources: Sequence[Domain], k: int) -> List[str]:
        if not sources:
            raise InvalidParameters("lista de origens vazia")
        if k < 0:
            raise InvalidParameters(f"k deve ser >= 0: {k}")
        slds = [s.sld for s in sources]
        short = [s for s in slds if len(s) < k]
        if short:
            raise SourceTooShort(f"{len(short)} slds menores que k={k} (ex.: {short[0]})")
        return slds

    def variant_count(
        self,
        sld: str,
        k: int,
        alphabet: Sequence[str],
        include_indels: bool = False,
        cumulative: bool = True,
    ) -> int:
        """
        Número de variantes que build_filter insere para um sld.

        As variantes a distâncias diferentes são disjuntas, então a união
        de 1..k é a soma dos e_j.
        """
        alphabet_set = set(alphabet)
        m = len(alphabet)
        weights = [m - 1 if c in alphabet_set else m for c in sld]
        e = _elementary_symmetric(weights, k)
        count = sum(e[j] for j in edit_distances(k, cumulative))
        if include_indels:
            count += (len(sld) + 1) * m + len(sld)
        return count

    def _make_plan(
        self,
        n_sources: int,
        mean_length: float,
        alphabet_size: int,
        k: int,
        predicted: int,
        target_fpr: float,
        memory_budget_bytes: int,
        tld_count: int,
        include_indels: bool,
        cumulative: bool,
        enforce: bool,
    ) -> FilterBuildPlan:
        if predicted < 1:
            raise InvalidParameters("nenhuma inserção prevista")
        if not 0.0 < target_fpr < 0.5:
            raise InvalidParameters(f"FPR alvo fora de (0, 0.5): {target_fpr}")
        m_bits, hash_count = _bloom_size(predicted, target_fpr)
        plan = FilterBuildPlan(
            n_sources=n_sources,
            mean_length=mean_length,
            alphabet_size=alphabet_size,
            edits=k,
            tld_count=tld_count,
            include_indels=include_indels,
            cumulative=cumulative,
            predicted_insertions=predicted,
            target_fpr=target_fpr,
            m_bits=m_bits,
            hash_count=hash_count,
            memory_budget_bytes=memory_budget_bytes,
        )
        logger.info(
            f"Plano: {predicted:,} inserções, {m_bits:,} bits, {hash_count} hashes "
            f"({plan.size_bytes:,} bytes de {memory_budget_bytes:,})"
        )
        if enforce and not plan.feasible:
            raise InfeasiblePlan(predicted, m_bits, memory_budget_bytes)
        return plan

    def plan_filter(
        self,
        sources: Sequence[Domain],
        k: int,
        alphabet: Sequence[str] = DEFAULT_ALPHABET,
        target_fpr: float = 0.01,
        memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET,
        include_original: bool = False,
        include_indels: bool = False,
        tld_count: int = 1,
        cumulative: bool = True,
        enforce: bool = True,
    ) -> FilterBuildPlan:
        """
        Dimensionar o filtro contando exatamente as inserções.

        Com todos os caracteres dos slds no alfabeto a contagem por sld é
        Σ_{j=1..k} C(ℓ, j)·(m−1)^j; com `cumulative=False` só o termo j=k.
        `tld_count` > 1 multiplica pelo número de TLDs quando eles também
        são enumerados.

        Raises:
            InfeasiblePlan: o filtro não cabe no orçamento de memória
        """
        slds = self._check_sources(sources, k)
        predicted = sum(self.variant_count(s, k, alphabet, include_indels, cumulative) for s in slds) * tld_count
        if include_original:
            predicted += len(slds) * tld_count
        mean_length = sum(len(s) for s in slds) / len(slds)
        return self._make_plan(
            len(slds), mean_length, len(alphabet), k, predicted, target_fpr,
            memory_budget_bytes, tld_count, include_indels, cumulative, enforce,
        )

    def plan_from_shape(
        self,
        n: int,
        length: int,
        alphabet_size: int,
        k: int,
        target_fpr: float = 0.01,
        memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET,
        cumulative: bool = True,
        enforce: bool = True,
    ) -> FilterBuildPlan:
        """Plano a partir da forma média (n origens de comprimento ℓ), sem a lista."""
        predicted = sum(
            charbot_service.candidate_space_size(n, length, alphabet_size, j)
            for j in edit_distances(k, cumulative)
        )
        return self._make_plan(
            n, float(length), alphabet_size, k, predicted, target_fpr,
            memory_budget_bytes, 1, False, cumulative, enforce,
        )

    def enumerate_variants(
        self,
        sld: str,
        k: int,
        alphabet: Sequence[str],
        include_indels: bool = False,
        cumulative: bool = True,
    ) -> Iterator[str]:
        """Variantes a 1..k substituições (ou exatamente k) e, opcionalmente, uma inserção ou remoção."""
        chars = list(sld)
        options = [[c for c in alphabet if c != original] for original in sld]
        for distance in edit_distances(k, cumulative):
            for positions in itertools.combinations(range(len(sld)), distance):
                for replacement in itertools.product(*(options[i] for i in positions)):
                    variant = chars[:]
                    for pos, char in zip(positions, replacement):
                        variant[pos] = char
                    yield "".join(variant)
        if include_indels:
            for pos in range(len(sld) + 1):
                for char in alphabet:
                    yield sld[:pos] + char + sld[pos:]
            for pos in range(len(sld)):
                yield sld[:pos] + sld[pos + 1:]

    def _digest(self, parts: Sequence[str]) -> str:
        return sha256("\n".join(parts).encode()).hexdigest()[:16]

    def _fill(
        self,
        bloom: TyposquatFilter,
        slds: Sequence[str],
        k: int,
        alphabet: Sequence[str],
        include_original: bool,
        include_indels: bool,
        cumulative: bool,
    ) -> TyposquatFilter:
        batch: List[str] = []
        for sld in slds:
            if include_original:
                batch.append(sld)
            batch.extend(self.enumerate_variants(sld, k, alphabet, include_indels, cumulative))
            if len(batch) >= INSERT_BATCH:
                bloom.add_many(batch)
                batch = []
        bloom.add_many(batch)
        return bloom

    def build_filter(
        self,
        sources: Sequence[Domain],
        k: int,
        alphabet: Sequence[str],
        plan: FilterBuildPlan,
        include_original: bool = False,
        shards: int = 1,
    ) -> TyposquatFilter:
        """
        Inserir todas as variantes dos slds de origem.

        Com `shards` > 1 as origens são divididas em blocos, cada bloco
        gera um filtro próprio e o resultado é o OR dos filtros.
        """
        if not plan.feasible:
            raise InfeasiblePlan(plan.predicted_insertions, plan.m_bits, plan.memory_budget_bytes)
        slds = self._check_sources(sources, k)
        header = FilterHeader(
            m_bits=plan.m_bits,
            hash_count=plan.hash_count,
            inserted=0,
            edits=k,
            source_digest=self._digest(slds),
            alphabet_digest=self._digest(list(alphabet)),
            include_original=include_original,
            include_indels=plan.include_indels,
            cumulative=plan.cumulative,
            target_fpr=plan.target_fpr,
        )
        shards = max(1, min(shards, len(slds)))
        size = math.ceil(len(slds) / shards)
        parts = [
            self._fill(
                TyposquatFilter.empty(header), slds[i:i + size], k, alphabet,
                include_original, plan.include_indels, plan.cumulative,
            )
            for i in range(0, len(slds), size)
        ]
        bloom = TyposquatFilter.merge_all(parts)
        if bloom.inserted != plan.predicted_insertions:
            logger.warning(f"Inserções ({bloom.inserted:,}) diferem do plano ({plan.predicted_insertions:,})")
        logger.info(f"Filtro construído: {bloom.inserted:,} inserções, ocupação {bloom.fill_ratio():.4f}")
        return bloom

    def check(self, bloom: TyposquatFilter, d: Domain) -> CheckResultEnum:
        return CheckResultEnum.HIT if d.sld in bloom else CheckResultEnum.MISS

    def check_many(self, bloom: TyposquatFilter, domains: Sequence[Domain]) -> List[CheckResultEnum]:
        hits = bloom.contains_many([d.sld for d in domains])
        return [CheckResultEnum.HIT if h else CheckResultEnum.MISS for h in hits]

    def near_match_scan(
        self,
        d: Domain,
        sources: Sequence[Domain],
        max_edit: int,
    ) -> Optional[Tuple[Domain, int]]:
        """Primeira origem (menor índice) com distância de edição <= max_edit no sld."""
        for source in sources:
            distance = charbot_service.levenshtein(d.sld, source.sld, cutoff=max_edit)
            if distance <= max_edit:
                return source, distance
        return None


defense_service = DefenseService()
