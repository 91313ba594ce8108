from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.domain import SLD_CHARS, Domain

# TLDs anexados pelo CharBot por padrão
DEFAULT_TLDS: Tuple[str, ...] = (
    "com", "at", "uk", "pl", "be", "biz", "co", "jp", "cz", "de", "eu",
    "fr", "info", "it", "ru", "lv", "me", "name", "net", "nz", "org", "us",
)

# Os 37 caracteres válidos em DNS: a-z, 0-9 e hífen
DEFAULT_ALPHABET: Tuple[str, ...] = tuple("abcdefghijklmnopqrstuvwxyz0123456789-")


class CharbotConfig(BaseModel):
    """
    Parâmetros do gerador CharBot.
    """
    model_config = ConfigDict(frozen=True)

    tld_list: Tuple[str, ...] = Field(default=DEFAULT_TLDS, min_length=1)
    replacement_count: int = Field(default=2, ge=1, description="k substituições por domínio")
    alphabet: Tuple[str, ...] = Field(default=DEFAULT_ALPHABET)

    # Extensões desligadas por padrão
    insertions: int = Field(default=0, ge=0)
    deletions: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_alphabet(self) -> "CharbotConfig":
        if len(self.alphabet) < 2:
            raise ValueError("alfabeto precisa de pelo menos 2 caracteres")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("alfabeto com caracteres duplicados")
        if any(len(c) != 1 or c not in SLD_CHARS for c in self.alphabet):
            raise ValueError("alfabeto com caractere inválido para DNS")
        if any(not t for t in self.tld_list):
            raise ValueError("tld vazio em tld_list")
        return self

    @property
    def k(self) -> int:
        return self.replacement_count


class PerturbationRecord(BaseModel):
    """
    Saída do CharBot com proveniência completa.
    """
    model_config = ConfigDict(frozen=True)

    source: Domain
    output: Domain
    indices: Tuple[int, ...]
    replacements: Tuple[str, ...]
    seed: int
    inserted: Tuple[Tuple[int, str], ...] = ()
    deleted: Tuple[int, ...] = ()

    @model_validator(mode="after")
    def check_provenance(self) -> "PerturbationRecord":
        if len(self.indices) != len(self.replacements):
            raise ValueError("indices e replacements com tamanhos diferentes")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("indices repetidos")
        src = self.source.sld
        for idx, char in zip(self.indices, self.replacements):
            if not 0 <= idx < len(src):
                raise ValueError(f"índice {idx} fora do SLD '{src}'")
            if src[idx] == char:
                raise ValueError(f"substituição igual ao original na posição {idx}")
        if not self.inserted and not self.deleted:
            out = self.output.sld
            if len(out) != len(src):
                raise ValueError("saída com tamanho diferente sem inserções/remoções")
            changed = [i for i, (a, b) in enumerate(zip(src, out)) if a != b]
            if sorted(changed) != sorted(self.indices):
                raise ValueError("saída difere da origem fora dos índices registrados")
        return self

    def sidecar_row(self) -> List[str]:
        """Linha do CSV de proveniência: output,source,indices,replacements,seed."""
        return [
            self.output.render(),
            self.source.render(),
            ";".join(str(i) for i in self.indices),
            ";".join(self.replacements),
            str(self.seed),
        ]
