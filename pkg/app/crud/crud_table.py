import re
from pathlib import Path
from typing import FrozenSet

from pydantic import ValidationError

from app.core.exceptions import CorruptModel, DatasetIoError
from app.schemas.features import NgramTable, TldContext

HEADER_PATTERN = re.compile(r"^#n=(\d+)\s+default=(\S+)\s*$")


class CRUDTable:
    """
    Arquivos de tabelas de n-gramas e listas de TLD.
    """

    def save_ngram_table(self, path: Path, table: NgramTable) -> None:
        """
        Formato: cabeçalho `#n=<n> default=<f>` e linhas `ngram<TAB>freq`,
        ordenadas pelo n-grama. Frequências em repr para ida e volta exata.
        """
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"#n={table.n} default={table.default_frequency!r}\n")
            for gram in sorted(table.entries):
                f.write(f"{gram}\t{table.entries[gram]!r}\n")

    def load_ngram_table(self, path: Path) -> NgramTable:
        try:
            with open(path, encoding="utf-8") as f:
                lines = f.read().splitlines()
        except OSError as e:
            raise DatasetIoError(f"Erro ao ler tabela '{path}': {e}") from e
        except UnicodeDecodeError as e:
            raise CorruptModel(f"Tabela '{path}' não é UTF-8: {e}") from e

        if not lines:
            raise CorruptModel(f"Tabela vazia: '{path}'")
        match = HEADER_PATTERN.match(lines[0])
        if not match:
            raise CorruptModel(f"Cabeçalho inválido em '{path}': {lines[0]!r}")

        entries = {}
        for line_no, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            try:
                gram, freq = line.split("\t")
                entries[gram] = float(freq)
            except ValueError as e:
                raise CorruptModel(f"Linha {line_no} inválida em '{path}': {line!r}") from e
        try:
            return NgramTable(n=int(match.group(1)), entries=entries, default_frequency=float(match.group(2)))
        except (ValueError, ValidationError) as e:
            raise CorruptModel(f"Tabela inconsistente em '{path}': {e}") from e

    def load_tld_set(self, path: Path) -> FrozenSet[str]:
        """Um TLD por linha; '#' comenta, ponto inicial é opcional."""
        try:
            with open(path, encoding="utf-8") as f:
                tlds = {
                    line.strip().lower().lstrip(".")
                    for line in f
                    if line.strip() and not line.startswith("#")
                }
        except OSError as e:
            raise DatasetIoError(f"Erro ao ler lista de TLDs '{path}': {e}") from e
        return frozenset(t for t in tlds if t)

    def load_tld_context(self, valid_path: Path, malicious_path: Path) -> TldContext:
        return TldContext(
            valid_tlds=self.load_tld_set(valid_path),
            malicious_tlds=self.load_tld_set(malicious_path),
        )


table = CRUDTable()
