from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
import xxhash

from app.schemas.defense import FilterHeader

# Sementes das duas funções xxh64 da dupla hash
SEED_PRIMARY = 0
SEED_SECONDARY = 1


def hash_pair(keys: Sequence[str]) -> tuple:
    """(h1, h2) por chave; h2 é forçado a ímpar."""
    h1 = np.fromiter((xxhash.xxh64_intdigest(k, SEED_PRIMARY) for k in keys), dtype=np.uint64, count=len(keys))
    h2 = np.fromiter((xxhash.xxh64_intdigest(k, SEED_SECONDARY) for k in keys), dtype=np.uint64, count=len(keys))
    return h1, h2 | np.uint64(1)


def packed_size(m_bits: int) -> int:
    return (m_bits + 7) // 8


@dataclass
class TyposquatFilter:
    """
    Filtro de Bloom sobre slds.

    Posição j de uma chave: (h1 + j·h2) mod 2^64 mod m_bits. Os bits ficam
    empacotados em uint8, bit p no byte p >> 3 com máscara 1 << (p & 7),
    a mesma ordem do arquivo.
    """
    header: FilterHeader
    bits: np.ndarray

    def __post_init__(self):
        if self.bits.dtype != np.uint8 or self.bits.size != packed_size(self.header.m_bits):
            raise ValueError(
                f"bits devem ser uint8 com {packed_size(self.header.m_bits)} bytes "
                f"(recebido {self.bits.dtype}, {self.bits.size})"
            )

    @classmethod
    def empty(cls, header: FilterHeader) -> "TyposquatFilter":
        return cls(header, np.zeros(packed_size(header.m_bits), dtype=np.uint8))

    @property
    def m_bits(self) -> int:
        return self.header.m_bits

    @property
    def hash_count(self) -> int:
        return self.header.hash_count

    @property
    def inserted(self) -> int:
        return self.header.inserted

    @property
    def size_bytes(self) -> int:
        return int(self.bits.nbytes)

    def positions(self, keys: Sequence[str]) -> np.ndarray:
        """Matriz (len(keys), hash_count) de índices de bits."""
        h1, h2 = hash_pair(keys)
        j = np.arange(self.hash_count, dtype=np.uint64)
        # Multiplicação em uint64 dá a volta em 2^64
        with np.errstate(over="ignore"):
            combined = h1[:, None] + j[None, :] * h2[:, None]
        return (combined % np.uint64(self.m_bits)).astype(np.int64)

    @staticmethod
    def _locate(positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return positions >> 3, np.left_shift(1, positions & 7).astype(np.uint8)

    def add_many(self, keys: Sequence[str]) -> int:
        if not keys:
            return 0
        index, mask = self._locate(self.positions(keys).ravel())
        np.bitwise_or.at(self.bits, index, mask)
        self.header = self.header.model_copy(update={"inserted": self.header.inserted + len(keys)})
        return len(keys)

    def contains_many(self, keys: Sequence[str]) -> np.ndarray:
        if not keys:
            return np.zeros(0, dtype=bool)
        index, mask = self._locate(self.positions(keys))
        return ((self.bits[index] & mask) != 0).all(axis=1)

    def __contains__(self, key: str) -> bool:
        return bool(self.contains_many([key])[0])

    def fill_ratio(self) -> float:
        return float(np.bitwise_count(self.bits).sum()) / self.m_bits

    def merge(self, other: "TyposquatFilter") -> "TyposquatFilter":
        """OR bit a bit de dois shards construídos com os mesmos parâmetros."""
        if (other.m_bits, other.hash_count) != (self.m_bits, self.hash_count):
            raise ValueError("shards com m_bits ou hash_count diferentes")
        header = self.header.model_copy(update={"inserted": self.inserted + other.inserted})
        return TyposquatFilter(header, self.bits | other.bits)

    @classmethod
    def merge_all(cls, shards: Iterable["TyposquatFilter"]) -> "TyposquatFilter":
        shards = list(shards)
        result = shards[0]
        for shard in shards[1:]:
            result = result.merge(shard)
        return result
