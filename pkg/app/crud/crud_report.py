import logging
from pathlib import Path
from typing import List, Union

import orjson
import pandas as pd
from pydantic import ValidationError

from app.core.exceptions import CorruptModel, DatasetIoError, VersionMismatch
from app.schemas.analysis import DensityCurve, LengthStats
from app.schemas.evaluation import REPORT_FORMAT_VERSION, EvalMatrix, RocCurve

logger = logging.getLogger('dgalab.crud_report')

ROC_MAX_FPR = 0.01


class CRUDReport:
    """
    Relatórios de avaliação: JSON versionado, CSV plano por célula e
    pontos ROC na região de baixo FPR.
    """

    def dumps_json(self, report: EvalMatrix) -> bytes:
        return orjson.dumps(report.model_dump(mode="json"), option=orjson.OPT_INDENT_2)

    def save_json(self, path: Path, report: EvalMatrix) -> None:
        self._write(path, self.dumps_json(report))

    def load_json(self, path: Path) -> EvalMatrix:
        try:
            data = orjson.loads(path.read_bytes())
        except OSError as e:
            raise DatasetIoError(f"Erro ao ler relatório '{path}': {e}") from e
        except orjson.JSONDecodeError as e:
            raise CorruptModel(f"Relatório '{path}' ilegível: {e}") from e
        if data.get("format_version") != REPORT_FORMAT_VERSION:
            raise VersionMismatch(f"Versão de relatório {data.get('format_version')} não suportada")
        try:
            return EvalMatrix(**data)
        except ValidationError as e:
            raise CorruptModel(f"Relatório '{path}' inválido: {e}") from e

    def to_frame(self, report: EvalMatrix) -> pd.DataFrame:
        """Uma linha por (célula, FPR alvo); taxas de detecção como colunas `det_<conjunto>`."""
        rows = []
        for cell in report.cells:
            if cell.report is None:
                rows.append({"cell": cell.name, "augmentation": cell.augmentation or "", "error": cell.error or ""})
                continue
            for entry in cell.report.entries:
                row = {
                    "cell": cell.name,
                    "augmentation": cell.augmentation or "",
                    "error": "",
                    "full_auc": cell.report.full_auc,
                    "target_fpr": entry.target_fpr,
                    "unachievable": entry.unachievable,
                    "threshold": entry.threshold,
                    "achieved_fpr": entry.achieved_fpr,
                    "tpr": entry.tpr,
                    "normalized_partial_auc": entry.normalized_partial_auc,
                }
                for name in report.adversarial_sets:
                    row[f"det_{name}"] = entry.detection_rates.get(name)
                rows.append(row)
        return pd.DataFrame(rows)

    def save_csv(self, path: Path, report: EvalMatrix) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self.to_frame(report).to_csv(path, index=False)
        except OSError as e:
            raise DatasetIoError(f"Erro ao gravar '{path}': {e}") from e

    def save_roc(self, path: Path, curve: RocCurve, max_fpr: float = ROC_MAX_FPR) -> int:
        points = [(f, t) for f, t, _ in curve.points() if f <= max_fpr]
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            pd.DataFrame(points, columns=["fpr", "tpr"]).to_csv(path, index=False)
        except OSError as e:
            raise DatasetIoError(f"Erro ao gravar '{path}': {e}") from e
        return len(points)

    def save_scores(self, path: Path, domains: List[str], scores) -> None:
        """CSV `domain,score` na ordem de entrada."""
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            pd.DataFrame({"domain": domains, "score": scores}).to_csv(path, index=False)
        except OSError as e:
            raise DatasetIoError(f"Erro ao gravar '{path}': {e}") from e

    def save_density(self, path: Path, curve: DensityCurve) -> None:
        """CSV `x,density` de uma curva KDE."""
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            pd.DataFrame({"x": curve.grid, "density": curve.densities}).to_csv(path, index=False)
        except OSError as e:
            raise DatasetIoError(f"Erro ao gravar '{path}': {e}") from e

    def save_length_stats(self, path: Path, stats: List[LengthStats]) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame([s.model_dump() for s in stats], columns=["dataset", "mean", "std", "count"])
        try:
            frame.to_csv(path, index=False)
        except OSError as e:
            raise DatasetIoError(f"Erro ao gravar '{path}': {e}") from e

    def _write(self, path: Path, payload: Union[bytes, str]) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            if isinstance(payload, bytes):
                path.write_bytes(payload)
            else:
                path.write_text(payload, encoding="utf-8")
        except OSError as e:
            raise DatasetIoError(f"Erro ao gravar '{path}': {e}") from e
        logger.info(f"Relatório gravado em {path}")


report = CRUDReport()
