from pathlib import Path
from typing import Tuple

import numpy as np
import orjson
from pydantic import ValidationError

from app.core.exceptions import CorruptModel, DatasetIoError, VersionMismatch
from app.schemas.defense import FilterHeader

MAGIC = b"DGALAB-BLOOM"


class CRUDFilter:
    """
    Arquivo do filtro: uma linha `DGALAB-BLOOM <json do cabeçalho>` seguida
    dos bits empacotados (bit p no byte p >> 3, máscara 1 << (p & 7))
    exatamente como ficam em memória.
    """

    def save(self, path: Path, header: FilterHeader, bits: np.ndarray) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            with open(path, "wb") as f:
                f.write(MAGIC + b" " + orjson.dumps(header.model_dump()) + b"\n")
                f.write(np.ascontiguousarray(bits, dtype=np.uint8).tobytes())
        except OSError as e:
            raise DatasetIoError(f"Erro ao gravar filtro '{path}': {e}") from e

    def load(self, path: Path) -> Tuple[FilterHeader, np.ndarray]:
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise DatasetIoError(f"Erro ao ler filtro '{path}': {e}") from e

        first, sep, payload = raw.partition(b"\n")
        if not sep or not first.startswith(MAGIC + b" "):
            raise CorruptModel(f"Arquivo '{path}' não é um filtro dgalab")
        try:
            fields = orjson.loads(first[len(MAGIC) + 1:])
        except orjson.JSONDecodeError as e:
            raise CorruptModel(f"Cabeçalho do filtro ilegível: {e}") from e
        if fields.get("version") != 1:
            raise VersionMismatch(f"Versão de filtro {fields.get('version')} não suportada")
        try:
            header = FilterHeader(**fields)
        except ValidationError as e:
            raise CorruptModel(f"Cabeçalho do filtro inválido: {e}") from e

        expected = (header.m_bits + 7) // 8
        if len(payload) != expected:
            raise CorruptModel(f"Filtro truncado: {len(payload)} bytes, esperado {expected}")
        return header, np.frombuffer(payload, dtype=np.uint8).copy()


filter_store = CRUDFilter()
