"""
Primitivas determinísticas: FNV-1a 64 bits e gerador SplitMix64.

Ambas são independentes de plataforma e linguagem; os vetores de teste
estão em FORMATS.md e em tests/test_prng.py.
"""
from typing import List, Sequence, TypeVar

T = TypeVar("T")

MASK64 = (1 << 64) - 1

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def fnv1a_64(data: bytes) -> int:
    """Hash FNV-1a de 64 bits."""
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


class SplitMix64:
    """
    Gerador SplitMix64 (avanço de estado por constante de ouro).

    Usado pelo CharBot para que lotes sejam reproduzíveis bit a bit.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """
        Inteiro uniforme em [0, n) por rejeição (sem viés de módulo).
        """
        if n <= 0:
            raise ValueError("n deve ser positivo")
        # Descarta a faixa inicial que tornaria o módulo enviesado
        threshold = ((1 << 64) - n) % n
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % n

    def choice(self, items: Sequence[T]) -> T:
        return items[self.below(len(items))]

    def sample_indices(self, population: int, k: int) -> List[int]:
        """k posições distintas de range(population), sem reposição."""
        pool = list(range(population))
        return [pool.pop(self.below(len(pool))) for _ in range(k)]

    def snapshot(self) -> int:
        return self.state

    @classmethod
    def restore(cls, state: int) -> "SplitMix64":
        rng = cls(0)
        rng.state = state & MASK64
        return rng
