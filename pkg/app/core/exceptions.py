"""
Hierarquia de erros do dgalab.

Todo erro de domínio herda de DgalabError e carrega o código de saída
que a CLI devolve ao operador (tabela de códigos no CLI-GUIDE.md).
"""
from typing import List, Optional, Tuple


class DgalabError(Exception):
    """Erro base do projeto."""

    exit_code: int = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# =================== ENTRADA / INGESTÃO ===================

class MalformedDomain(DgalabError):
    exit_code = 2

    def __init__(self, raw: str, reason: str):
        super().__init__(f"Domínio inválido '{raw}': {reason}")
        self.raw = raw
        self.reason = reason


class EmptyDataset(DgalabError):
    exit_code = 2


class DatasetIoError(DgalabError):
    exit_code = 2


class InvalidDate(DgalabError):
    exit_code = 2


class InvalidParameters(DgalabError):
    exit_code = 2


# =================== GERAÇÃO (CHARBOT) ===================

class SourceTooShort(DgalabError):
    exit_code = 2


class ExhaustedAttempts(DgalabError):
    exit_code = 3

    def __init__(self, produced: int, requested: int, attempts: int):
        super().__init__(
            f"Apenas {produced} de {requested} domínios únicos após {attempts} tentativas"
        )
        self.produced = produced
        self.requested = requested
        self.attempts = attempts


class OracleUnavailable(DgalabError):
    exit_code = 2


# =================== FEATURES ===================

class EmptyString(DgalabError):
    exit_code = 2


class StringTooShort(DgalabError):
    exit_code = 2


class FeatureExtractionError(DgalabError):
    exit_code = 2

    def __init__(self, column: str, domain: str, cause: Exception):
        super().__init__(f"Falha na coluna '{column}' para '{domain}': {cause}")
        self.column = column
        self.domain = domain


class DatasetFeaturizationError(DgalabError):
    exit_code = 2

    def __init__(self, errors: List[Tuple[int, str]]):
        preview = "; ".join(f"linha {idx}: {msg}" for idx, msg in errors[:5])
        super().__init__(f"{len(errors)} linhas falharam na extração ({preview})")
        self.errors = errors


# =================== FOREST ===================

class SchemaMismatch(DgalabError):
    exit_code = 4


class SingleClassData(DgalabError):
    exit_code = 5


class DegenerateData(DgalabError):
    exit_code = 5


class VersionMismatch(DgalabError):
    exit_code = 2


class CorruptModel(DgalabError):
    exit_code = 2


# =================== AVALIAÇÃO ===================

class Unachievable(DgalabError):
    exit_code = 6

    def __init__(self, target: float, best_fpr: Optional[float] = None):
        detail = f" (menor FPR possível: {best_fpr:.6f})" if best_fpr is not None else ""
        super().__init__(f"Nenhum threshold atinge FPR <= {target}{detail}")
        self.target = target
        self.best_fpr = best_fpr


class NoSuccessfulCells(DgalabError):
    exit_code = 6


# =================== DEFESA ===================

class InfeasiblePlan(DgalabError):
    exit_code = 7

    def __init__(self, predicted_insertions: int, m_bits: int, budget_bytes: int):
        super().__init__(
            f"Plano inviável: {predicted_insertions:,} inserções exigem "
            f"{m_bits:,} bits ({m_bits // 8:,} bytes) acima do limite de {budget_bytes:,} bytes"
        )
        self.predicted_insertions = predicted_insertions
        self.m_bits = m_bits
        self.budget_bytes = budget_bytes
