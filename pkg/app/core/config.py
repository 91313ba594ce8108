import os
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional, Tuple, Type

from dotenv import dotenv_values
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, NoDecode, PydanticBaseSettingsSource, SettingsConfigDict

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


class Settings(BaseSettings):
    """
    Configuração do dgalab.

    Ordem de precedência: variáveis DGALAB_* > arquivo de configuração
    (`chave = valor`) > valores padrão.
    """

    model_config = SettingsConfigDict(env_prefix="DGALAB_", case_sensitive=False, extra="ignore")

    # Corpora
    alexa_path: Optional[Path] = Field(default=None, description="CSV rank,domain no estilo Alexa")
    benign_path: Optional[Path] = Field(default=None, description="Lista benigna alternativa (ex.: weak-label)")
    malicious_path: Optional[Path] = Field(default=None, description="Feed de DGA (estilo Bambenek)")
    registered_path: Optional[Path] = Field(default=None, description="Arquivo ordenado de domínios registrados")

    # Contexto de TLD e tabelas de n-gramas
    valid_tlds_path: Path = Field(default=DATA_DIR / "valid_tlds.txt")
    malicious_tlds_path: Path = Field(default=DATA_DIR / "malicious_tlds.txt")
    bigram_table_path: Optional[Path] = None
    trigram_table_path: Optional[Path] = None

    # Saídas
    model_dir: Path = Field(default=Path("models"))
    output_dir: Path = Field(default=Path("out"))

    # Sementes
    train_seed_date: str = Field(default="2018-12-04")
    test_seed_date: str = Field(default="2019-01-01")
    split_seed: int = Field(default=7)
    forest_seed: int = Field(default=42)

    # Avaliação
    target_fprs: Annotated[List[float], NoDecode] = Field(default_factory=lambda: [0.001, 0.01])

    # CharBot
    min_sld_len: int = Field(default=6, ge=1)
    source_limit: int = Field(default=10_000, ge=1)

    # Defesa
    memory_budget_bytes: int = Field(default=1 << 30, ge=1)
    filter_fpr: float = Field(default=0.01, gt=0.0, lt=0.5)

    debug: bool = Field(default=False)

    @field_validator("target_fprs", mode="before")
    @classmethod
    def split_fprs(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [float(part) for part in value.split(",") if part.strip()]
        return value

    @field_validator("target_fprs")
    @classmethod
    def check_fprs(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("target_fprs não pode ser vazio")
        if any(not 0.0 < v < 1.0 for v in value):
            raise ValueError("target_fprs devem estar em (0, 1)")
        if any(a >= b for a, b in zip(value, value[1:])):
            raise ValueError("target_fprs devem ser estritamente crescentes")
        return value

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # Ambiente vence o arquivo, que chega via init kwargs
        return env_settings, init_settings, file_secret_settings

    @classmethod
    def from_file(cls, path: Optional[Path] = None) -> "Settings":
        """
        Carregar configuração do arquivo `chave = valor`.

        Sem caminho explícito usa DGALAB_CONFIG; sem nenhum dos dois,
        apenas ambiente e padrões.
        """
        if path is None and os.environ.get("DGALAB_CONFIG"):
            path = Path(os.environ["DGALAB_CONFIG"])

        values: Dict[str, Any] = {}
        if path is not None:
            raw = dotenv_values(path)
            values = {key.strip().lower(): value for key, value in raw.items() if value is not None}
        return cls(**values)


# Instância global das configurações
settings = Settings.from_file()
