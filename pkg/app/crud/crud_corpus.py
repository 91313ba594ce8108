import csv
import logging
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Tuple

from app.core.exceptions import DatasetIoError
from app.schemas.charbot import PerturbationRecord

logger = logging.getLogger('dgalab.corpus')

SIDECAR_HEADER = ["output", "source", "indices", "replacements", "seed"]


class CRUDCorpus:
    """
    Leitura e escrita dos arquivos de corpora (listas de domínios, CSV
    no estilo Alexa, logs de consulta e sidecar de proveniência).
    """

    def _open(self, path: Path, mode: str = "r"):
        try:
            if "b" in mode:
                return open(path, mode)
            return open(path, mode, encoding="utf-8", newline="" if "w" in mode else None)
        except OSError as e:
            raise DatasetIoError(f"Erro ao abrir '{path}': {e}") from e

    def _lines(self, path: Path) -> Iterator[Tuple[int, str]]:
        """
        Linhas decodificadas em UTF-8, sem o fim de linha.

        Linhas com bytes inválidos são puladas e contadas.
        """
        undecodable = 0
        with self._open(path, "rb") as f:
            for line_no, raw in enumerate(f, start=1):
                try:
                    text = raw.decode("utf-8")
                except UnicodeDecodeError:
                    undecodable += 1
                    logger.debug(f"{path.name}:{line_no} com bytes inválidos")
                    continue
                if line_no == 1:
                    text = text.lstrip("\ufeff")
                yield line_no, text.rstrip("\r\n")
        if undecodable:
            logger.warning(f"{undecodable} linhas com UTF-8 inválido ignoradas em {path.name}")

    def read_ranked(self, path: Path) -> Iterator[Tuple[int, Optional[int], str]]:
        """
        Ler linhas `rank,domain` ou `domain`.

        Retorna (número da linha, rank ou None, texto do domínio). O
        cabeçalho é ignorado quando o primeiro campo não é numérico.
        """
        for line_no, line in self._lines(path):
            line = line.strip()
            if not line:
                continue
            if "," not in line:
                yield line_no, None, line
                continue
            first, rest = line.split(",", 1)
            first = first.strip()
            if first.isdigit():
                yield line_no, int(first), rest.strip()
            elif line_no != 1:
                yield line_no, None, rest.strip()

    def read_list(self, path: Path) -> Iterator[Tuple[int, str]]:
        """Uma entrada por linha; linhas iniciadas por '#' são comentários."""
        for line_no, line in self._lines(path):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield line_no, line

    def read_query_log(self, path: Path) -> Iterator[Tuple[int, List[str]]]:
        """Linhas `domain,timestamp,response` como listas de campos."""
        for line_no, line in self._lines(path):
            row = next(csv.reader([line]), [])
            if not row or row[0].startswith("#"):
                continue
            if line_no == 1 and row[0].strip().lower() == "domain":
                continue
            yield line_no, [field.strip() for field in row]

    def write_list(self, path: Path, domains: Iterable[str]) -> int:
        path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with self._open(path, "w") as f:
            for d in domains:
                f.write(f"{d}\n")
                count += 1
        return count

    def write_sidecar(self, path: Path, records: Iterable[PerturbationRecord]) -> int:
        path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with self._open(path, "w") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(SIDECAR_HEADER)
            for record in records:
                writer.writerow(record.sidecar_row())
                count += 1
        return count


corpus = CRUDCorpus()
