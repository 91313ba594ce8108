import bisect
import logging
import math
from abc import ABC, abstractmethod
from datetime import date
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Set, Union

from app.core.exceptions import (
    DatasetIoError,
    ExhaustedAttempts,
    InvalidDate,
    InvalidParameters,
    OracleUnavailable,
    SourceTooShort,
)
from app.core.prng import SplitMix64, fnv1a_64
from app.crud import corpus as crud_corpus
from app.schemas.charbot import DEFAULT_TLDS, CharbotConfig, PerturbationRecord
from app.schemas.domain import Dataset, Domain, LabelEnum, LabeledExample

logger = logging.getLogger('dgalab.charbot')

# Tentativas por domínio pedido antes de desistir do lote
ATTEMPTS_PER_OUTPUT = 100


class RegistrationOracle(ABC):
    """
    Consulta offline de domínios já registrados.
    """

    @abstractmethod
    def is_registered(self, domain: Domain) -> bool:
        ...


class SetRegistrationOracle(RegistrationOracle):
    def __init__(self, domains: Iterable[str]):
        self._domains = frozenset(d.strip().lower() for d in domains)

    def is_registered(self, domain: Domain) -> bool:
        return domain.render() in self._domains


class FileRegistrationOracle(RegistrationOracle):
    """
    Arquivo ordenado com um domínio por linha, consultado por busca binária.
    """

    def __init__(self, path: Path):
        self.path = path
        self._entries: Optional[List[str]] = None

    def _load(self) -> List[str]:
        if self._entries is None:
            try:
                entries = [line.lower() for _, line in crud_corpus.read_list(self.path)]
            except DatasetIoError as e:
                raise OracleUnavailable(f"Oráculo de registro indisponível: {e.message}") from e
            if any(a > b for a, b in zip(entries, entries[1:])):
                logger.warning(f"{self.path.name} não está ordenado; ordenando em memória")
                entries.sort()
            self._entries = entries
        return self._entries

    def is_registered(self, domain: Domain) -> bool:
        entries = self._load()
        rendered = domain.render()
        pos = bisect.bisect_left(entries, rendered)
        return pos < len(entries) and entries[pos] == rendered


class CharbotService:
    """
    Gerador CharBot: substitui k caracteres do sld de um domínio benigno
    e troca o TLD por um da lista configurada.
    """

    def seed_from_date(self, value: Union[str, date]) -> int:
        """FNV-1a 64 do texto ISO-8601 "YYYY-MM-DD"."""
        if isinstance(value, date):
            text = value.isoformat()
        else:
            try:
                text = date.fromisoformat(value.strip()).isoformat()
            except (ValueError, AttributeError) as e:
                raise InvalidDate(f"Data inválida '{value}': use YYYY-MM-DD") from e
        return fnv1a_64(text.encode("ascii"))

    def _draw_replacement(self, cfg: CharbotConfig, rng: SplitMix64, original: str, at_edge: bool) -> str:
        char = rng.choice(cfg.alphabet)
        while char == original:
            char = rng.choice(cfg.alphabet)
        if at_edge and char == "-":
            no_hyphen = [c for c in cfg.alphabet if c != "-"]
            if not no_hyphen or all(c == original for c in no_hyphen):
                raise InvalidParameters("alfabeto não permite substituição válida na borda do sld")
            char = rng.choice(no_hyphen)
            while char == original:
                char = rng.choice(no_hyphen)
        return char

    def _apply_indels(self, cfg: CharbotConfig, rng: SplitMix64, sld: List[str]):
        deleted = []
        for _ in range(cfg.deletions):
            # Posições cuja remoção não expõe hífen nas pontas
            valid = [
                i for i in range(len(sld))
                if len(sld) > 1 and (sld[:i] + sld[i + 1:])[0] != "-" and (sld[:i] + sld[i + 1:])[-1] != "-"
            ]
            if not valid:
                break
            pos = valid[rng.below(len(valid))]
            del sld[pos]
            deleted.append(pos)

        inserted = []
        for _ in range(cfg.insertions):
            pos = rng.below(len(sld) + 1)
            at_edge = pos == 0 or pos == len(sld)
            char = rng.choice(cfg.alphabet)
            if at_edge and char == "-":
                char = rng.choice([c for c in cfg.alphabet if c != "-"])
            sld.insert(pos, char)
            inserted.append((pos, char))
        return tuple(inserted), tuple(deleted)

    def generate_one(
        self,
        cfg: CharbotConfig,
        sources: Sequence[Domain],
        rng: SplitMix64,
        seed: int = 0,
    ) -> PerturbationRecord:
        """
        Gerar um domínio perturbado.

        Ordem dos sorteios: origem, k posições distintas, os k caracteres
        substitutos, o TLD e por fim remoções/inserções (se ligadas).
        """
        if not sources:
            raise InvalidParameters("lista de origens vazia")
        source = rng.choice(sources)
        if len(source.sld) < cfg.k:
            raise SourceTooShort(f"sld '{source.sld}' menor que k={cfg.k}")

        sld = list(source.sld)
        last = len(sld) - 1
        indices = tuple(rng.sample_indices(len(sld), cfg.k))
        replacements = []
        for idx in indices:
            char = self._draw_replacement(cfg, rng, source.sld[idx], idx == 0 or idx == last)
            sld[idx] = char
            replacements.append(char)
        tld = rng.choice(cfg.tld_list)

        inserted, deleted = (), ()
        if cfg.insertions or cfg.deletions:
            inserted, deleted = self._apply_indels(cfg, rng, sld)

        return PerturbationRecord(
            source=source,
            output=Domain(sld="".join(sld), tld=tld),
            indices=indices,
            replacements=tuple(replacements),
            seed=seed,
            inserted=inserted,
            deleted=deleted,
        )

    def generate_batch(
        self,
        cfg: CharbotConfig,
        sources: Sequence[Domain],
        seed: int,
        n: int,
        oracle: Optional[RegistrationOracle] = None,
    ) -> List[PerturbationRecord]:
        """
        Gerar n domínios únicos a partir de uma única semente.

        Descarta saídas repetidas, iguais a uma origem ou (com oráculo)
        já registradas. Desiste após 100·n tentativas.
        """
        if n < 1:
            raise InvalidParameters(f"n deve ser >= 1: {n}")
        if not sources:
            raise InvalidParameters("lista de origens vazia")
        short = [s.render() for s in sources if len(s.sld) < cfg.k]
        if short:
            raise SourceTooShort(f"{len(short)} origens com sld menor que k={cfg.k} (ex.: {short[0]})")

        rng = SplitMix64(seed)
        seen: Set[str] = {s.render() for s in sources}
        records: List[PerturbationRecord] = []
        attempts = 0
        registered = 0
        max_attempts = ATTEMPTS_PER_OUTPUT * n
        while len(records) < n:
            if attempts >= max_attempts:
                raise ExhaustedAttempts(len(records), n, attempts)
            attempts += 1
            record = self.generate_one(cfg, sources, rng, seed=seed)
            rendered = record.output.render()
            if rendered in seen:
                continue
            if oracle is not None and oracle.is_registered(record.output):
                registered += 1
                continue
            seen.add(rendered)
            records.append(record)

        logger.info(f"{len(records)} domínios gerados em {attempts} tentativas (semente {seed})")
        if registered:
            logger.info(f"{registered} candidatos descartados por já estarem registrados")
        return records

    def levenshtein(self, a: str, b: str, cutoff: Optional[int] = None) -> int:
        """
        Distância de edição por programação dinâmica em duas linhas.

        Com `cutoff`, retorna cutoff + 1 assim que a distância certamente
        o ultrapassa.
        """
        if a == b:
            return 0
        if len(a) < len(b):
            a, b = b, a
        if cutoff is not None and len(a) - len(b) > cutoff:
            return cutoff + 1
        previous = list(range(len(b) + 1))
        for i, ca in enumerate(a, start=1):
            current = [i]
            for j, cb in enumerate(b, start=1):
                current.append(min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                ))
            if cutoff is not None and min(current) > cutoff:
                return cutoff + 1
            previous = current
        if cutoff is not None:
            return min(previous[-1], cutoff + 1)
        return previous[-1]

    def hamming(self, a: str, b: str) -> int:
        if len(a) != len(b):
            raise InvalidParameters("hamming exige strings de mesmo tamanho")
        return sum(1 for x, y in zip(a, b) if x != y)

    def adversarial_cost(self, x: Domain, x_tilde: Domain, oracle: RegistrationOracle) -> float:
        """Infinito se x̃ já está registrado; senão a distância de edição."""
        try:
            if oracle.is_registered(x_tilde):
                return math.inf
        except OracleUnavailable:
            raise
        except Exception as e:
            raise OracleUnavailable(f"Falha ao consultar o oráculo de registro: {e}") from e
        return self.levenshtein(x.render(), x_tilde.render())

    def candidate_space_size(self, n: int, l: int, m: int, k: int) -> int:
        """n · C(l, k) · (m−1)^k em aritmética inteira exata."""
        if n < 0 or l < 0 or k < 0:
            raise InvalidParameters("n, l e k devem ser não negativos")
        if k > l:
            raise InvalidParameters(f"k={k} maior que o comprimento l={l}")
        if m < 2:
            raise InvalidParameters(f"alfabeto precisa de pelo menos 2 caracteres: m={m}")
        return n * math.comb(l, k) * (m - 1) ** k

    def unregistered_fraction(
        self,
        records: Sequence[PerturbationRecord],
        oracle: RegistrationOracle,
        sample: int = 500,
        seed: int = 0,
    ) -> float:
        """Fração de uma amostra de saídas que o oráculo não conhece."""
        if not records:
            raise InvalidParameters("nenhum registro para auditar")
        rng = SplitMix64(seed)
        picks = rng.sample_indices(len(records), min(sample, len(records)))
        free = sum(1 for i in picks if not oracle.is_registered(records[i].output))
        logger.info(f"{free} de {len(picks)} domínios amostrados não registrados")
        return free / len(picks)

    def generate_random_domains(
        self,
        n: int,
        seed: int,
        lengths: Sequence[int],
        tld_list: Sequence[str] = DEFAULT_TLDS,
        alphabet: str = "abcdefghijklmnopqrstuvwxyz0123456789",
    ) -> Dataset:
        """
        DGA de referência: slds uniformemente aleatórios com comprimentos
        reamostrados de `lengths` (tipicamente o corpus benigno).
        """
        if n < 1 or not lengths:
            raise InvalidParameters("n >= 1 e lista de comprimentos não vazia")
        rng = SplitMix64(seed)
        seen: Set[str] = set()
        examples = []
        attempts = 0
        while len(examples) < n:
            if attempts >= ATTEMPTS_PER_OUTPUT * n:
                raise ExhaustedAttempts(len(examples), n, attempts)
            attempts += 1
            length = max(1, lengths[rng.below(len(lengths))])
            sld = "".join(alphabet[rng.below(len(alphabet))] for _ in range(length))
            domain = Domain(sld=sld, tld=tld_list[rng.below(len(tld_list))])
            rendered = domain.render()
            if rendered in seen:
                continue
            seen.add(rendered)
            examples.append(LabeledExample(domain=domain, label=LabelEnum.MALICIOUS, source_tag="random"))
        return Dataset(name=f"random-{seed}", examples=tuple(examples))

    def as_dataset(self, records: Sequence[PerturbationRecord], name: str, source_tag: str = "charbot") -> Dataset:
        return Dataset(
            name=name,
            examples=tuple(
                LabeledExample(domain=r.output, label=LabelEnum.MALICIOUS, source_tag=source_tag) for r in records
            ),
        )

    def write_batch(self, path: Path, records: Sequence[PerturbationRecord], sidecar: Optional[Path] = None) -> int:
        count = crud_corpus.write_list(path, (r.output.render() for r in records))
        if sidecar is not None:
            crud_corpus.write_sidecar(sidecar, records)
        return count


charbot_service = CharbotService()
