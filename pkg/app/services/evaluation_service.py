import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.core.exceptions import (
    DgalabError,
    EmptyDataset,
    InvalidParameters,
    SingleClassData,
    Unachievable,
)
from app.crud import report as crud_report
from app.models.forest import ForestModel
from app.models.matrix import FeatureMatrix
from app.schemas.charbot import CharbotConfig
from app.schemas.domain import Dataset, LabelEnum
from app.schemas.evaluation import (
    AdversarialSetSpec,
    EvalMatrix,
    EvalReport,
    ExperimentCell,
    ExperimentManifest,
    FprEntry,
    ReportFormatEnum,
    RocCurve,
)
from app.schemas.features import NgramTables, SCHEMAS, TldContext
from app.schemas.forest import ForestKindEnum
from app.services.charbot_service import charbot_service
from app.services.domain_service import domain_service
from app.services.feature_service import feature_service
from app.services.forest_service import forest_service

logger = logging.getLogger('dgalab.evaluation')

BASELINE = "baseline"


@dataclass(frozen=True)
class OperatingPoint:
    threshold: float
    fpr: float
    tpr: float


@dataclass
class ExperimentResult:
    """Grade de avaliação e as curvas ROC de cada célula treinada."""
    matrix: EvalMatrix
    curves: Dict[str, RocCurve] = field(default_factory=dict)


class EvaluationService:
    """
    Métricas em FPR fixo e o protocolo baseline vs retreino adversarial.
    """

    # ================= MÉTRICAS =================

    def roc(self, scores: Sequence[float], labels: Sequence[int]) -> RocCurve:
        """
        Curva ROC sobre os thresholds distintos em ordem decrescente.

        Scores empatados formam um único ponto; um exemplo é positivo
        quando score >= threshold.
        """
        s = np.asarray(scores, dtype=np.float64)
        y = np.asarray(labels, dtype=np.int64)
        if s.shape != y.shape:
            raise InvalidParameters("scores e rótulos com tamanhos diferentes")
        positives = int((y == 1).sum())
        negatives = int((y == 0).sum())
        if positives == 0 or negatives == 0:
            raise SingleClassData("ROC exige as duas classes")

        order = np.argsort(-s, kind="stable")
        s, y = s[order], y[order]
        # Último índice de cada grupo de scores iguais
        ends = np.flatnonzero(np.diff(s) != 0)
        ends = np.append(ends, s.shape[0] - 1)
        tp = np.cumsum(y)[ends]
        fp = (ends + 1) - tp

        tp_counts = (0,) + tuple(int(v) for v in tp)
        fp_counts = (0,) + tuple(int(v) for v in fp)
        return RocCurve(
            fpr=tuple(c / negatives for c in fp_counts),
            tpr=tuple(c / positives for c in tp_counts),
            thresholds=(float("inf"),) + tuple(float(v) for v in s[ends]),
            fp_counts=fp_counts,
            tp_counts=tp_counts,
            positives=positives,
            negatives=negatives,
        )

    def operating_point(self, curve: RocCurve, target: float) -> OperatingPoint:
        """
        Entre os thresholds finitos com FPR <= alvo, o de maior TPR.

        Raises:
            Unachievable: nem o threshold mais restritivo atinge o alvo
        """
        if not 0.0 < target < 1.0:
            raise InvalidParameters(f"FPR alvo fora de (0, 1): {target}")
        chosen = None
        for i in range(1, len(curve.fpr)):
            if curve.fpr[i] <= target:
                chosen = i
            else:
                break
        if chosen is None:
            raise Unachievable(target, curve.fpr[1])
        return OperatingPoint(curve.thresholds[chosen], curve.fpr[chosen], curve.tpr[chosen])

    def threshold_at_fpr(self, curve: RocCurve, target: float) -> float:
        return self.operating_point(curve, target).threshold

    def tpr_at_fpr(self, curve: RocCurve, target: float) -> float:
        return self.operating_point(curve, target).tpr

    def partial_auc(self, curve: RocCurve, target: float) -> float:
        """Integral trapezoidal da TPR em FPR ∈ [0, alvo], dividida pelo alvo."""
        if not 0.0 < target <= 1.0:
            raise InvalidParameters(f"FPR alvo fora de (0, 1]: {target}")
        f = np.asarray(curve.fpr)
        t = np.asarray(curve.tpr)
        x0, x1, t0, t1 = f[:-1], f[1:], t[:-1], t[1:]
        crosses = x1 > target
        with np.errstate(divide="ignore", invalid="ignore"):
            t_end = np.where(crosses, t0 + (t1 - t0) * (target - x0) / (x1 - x0), t1)
        x_end = np.minimum(x1, target)
        areas = np.where(x0 < target, (x_end - x0) * (t0 + t_end) / 2.0, 0.0)
        return float(min(1.0, areas.sum() / target))

    def auc(self, curve: RocCurve) -> float:
        f = np.asarray(curve.fpr)
        t = np.asarray(curve.tpr)
        return float(min(1.0, np.sum((f[1:] - f[:-1]) * (t[1:] + t[:-1]) / 2.0)))

    def detection_rate(self, scores: np.ndarray, threshold: float) -> float:
        """Fração dos exemplos com score >= threshold."""
        scores = np.asarray(scores, dtype=np.float64)
        if scores.size == 0:
            raise EmptyDataset("conjunto adversarial vazio")
        return float((scores >= threshold).mean())

    def model_detection_rate(self, model: ForestModel, adversarial: FeatureMatrix, threshold: float) -> float:
        return self.detection_rate(forest_service.score_matrix(model, adversarial), threshold)

    # ================= EXPERIMENTO =================

    def _evaluate_cell(
        self,
        name: str,
        augmentation: Optional[str],
        dataset_id: str,
        train: FeatureMatrix,
        test: FeatureMatrix,
        adversarial_tests: Dict[str, FeatureMatrix],
        kind: ForestKindEnum,
        seed: int,
        target_fprs: Sequence[float],
        brf_trees: int,
    ):
        model = forest_service.train(kind, train, seed, brf_trees)
        curve = self.roc(forest_service.score_matrix(model, test), test.y)
        adversarial_scores = {n: forest_service.score_matrix(model, m) for n, m in adversarial_tests.items()}

        entries = []
        for target in target_fprs:
            pauc = self.partial_auc(curve, target)
            try:
                point = self.operating_point(curve, target)
            except Unachievable as e:
                logger.warning(f"[{name}] {e.message}")
                entries.append(FprEntry(target_fpr=target, unachievable=True, normalized_partial_auc=pauc))
                continue
            rates = {n: self.detection_rate(s, point.threshold) for n, s in adversarial_scores.items() if s.size}
            entries.append(FprEntry(
                target_fpr=target,
                threshold=point.threshold,
                achieved_fpr=point.fpr,
                tpr=point.tpr,
                normalized_partial_auc=pauc,
                detection_rates=rates,
            ))
        report = EvalReport(
            model_id=f"{kind.value}-{model.train_config_digest}",
            dataset_id=dataset_id,
            full_auc=self.auc(curve),
            entries=entries,
        )
        return ExperimentCell(name=name, augmentation=augmentation, report=report), curve

    def run_experiment(
        self,
        base_train: Dataset,
        base_test: Dataset,
        adversarial_train_sets: Dict[str, Dataset],
        adversarial_test_sets: Dict[str, Dataset],
        kind: ForestKindEnum,
        seed: int,
        target_fprs: Sequence[float] = (0.001, 0.01),
        brf_trees: int = 100,
        tables: Optional[NgramTables] = None,
        tld_ctx: Optional[TldContext] = None,
    ) -> ExperimentResult:
        """
        Treinar o baseline e um modelo por conjunto de aumento.

        O split base é o mesmo em todas as células; thresholds são
        recalculados por modelo no teste base; taxas de detecção usam só
        os conjuntos adversariais de teste. Falhas de uma célula ficam
        registradas nela e as demais continuam.
        """
        kind = ForestKindEnum(kind)
        schema = SCHEMAS[kind.schema_name]
        if tables is None:
            benign = Dataset(
                name=f"{base_train.name}:benign",
                examples=tuple(e for e in base_train.examples if e.label == LabelEnum.BENIGN),
            )
            tables = feature_service.build_tables(benign, schema)

        def featurize(ds: Dataset, force_malicious: bool = False) -> FeatureMatrix:
            rows = feature_service.featurize_dataset(ds, schema, tables, tld_ctx, strict=False)
            if force_malicious:
                rows.y[:] = int(LabelEnum.MALICIOUS)
            return rows

        train = featurize(base_train)
        test = featurize(base_test)
        adversarial_tests = {name: featurize(ds) for name, ds in adversarial_test_sets.items()}

        cells: List[ExperimentCell] = []
        curves: Dict[str, RocCurve] = {}
        plan = [(BASELINE, None, None)] + [
            (f"augmented-{name}", name, ds) for name, ds in adversarial_train_sets.items()
        ]
        # aumento nunca repete domínios do treino nem vaza domínios de teste
        excluded = set(train.domains) | set(test.domains)
        for m in adversarial_tests.values():
            excluded.update(m.domains)
        for name, augmentation, ds in plan:
            logger.info(f"Célula '{name}'")
            try:
                rows = train
                if ds is not None:
                    extra = featurize(ds, force_malicious=True)
                    keep = np.array([d not in excluded for d in extra.domains], dtype=bool)
                    if not keep.any():
                        raise EmptyDataset(f"conjunto de aumento '{augmentation}' sem domínios fora do teste")
                    rows = train.concat(extra.take(np.flatnonzero(keep)))
                cell, curve = self._evaluate_cell(
                    name, augmentation, base_test.name, rows, test,
                    adversarial_tests, kind, seed, target_fprs, brf_trees,
                )
                curves[name] = curve
            except DgalabError as e:
                logger.error(f"Célula '{name}' falhou: {e.message}")
                cell = ExperimentCell(name=name, augmentation=augmentation, error=e.message)
            cells.append(cell)

        matrix = EvalMatrix(
            model_kind=kind,
            target_fprs=list(target_fprs),
            adversarial_sets=list(adversarial_test_sets),
            cells=cells,
        )
        logger.info(f"Experimento concluído: {matrix.succeeded}/{len(cells)} células com sucesso")
        return ExperimentResult(matrix=matrix, curves=curves)

    # ================= MANIFESTO =================

    def _adversarial_set(self, adv: AdversarialSetSpec, sources: Dataset, lengths: List[int]) -> Dataset:
        if adv.path is not None:
            return domain_service.load_domain_list(adv.path, LabelEnum.MALICIOUS, adv.name)
        seed = charbot_service.seed_from_date(adv.seed_date) if adv.seed_date else (adv.seed or 0)
        if adv.generator == "random":
            return charbot_service.generate_random_domains(adv.count, seed, lengths)
        records = charbot_service.generate_batch(CharbotConfig(), sources.domains(), seed, adv.count)
        return charbot_service.as_dataset(records, adv.name)

    def run_manifest(
        self,
        manifest: ExperimentManifest,
        tld_ctx: Optional[TldContext] = None,
    ) -> ExperimentResult:
        """Montar corpora, conjuntos adversariais e split a partir do manifesto."""
        if manifest.benign_format == "alexa":
            benign = domain_service.load_alexa(
                manifest.benign_path, manifest.benign_min_sld_len, manifest.benign_limit
            )
            sources = domain_service.load_alexa(
                manifest.benign_path, manifest.charbot_min_sld_len, manifest.charbot_source_limit
            )
        else:
            benign = domain_service.load_domain_list(manifest.benign_path, LabelEnum.BENIGN, "benign")
            eligible = tuple(e for e in benign.examples if len(e.domain.sld) >= manifest.charbot_min_sld_len)
            sources = Dataset(name="charbot-sources", examples=eligible[: manifest.charbot_source_limit])
            if not sources.examples:
                raise EmptyDataset("nenhuma origem elegível para o CharBot")

        lengths = [len(d.sld) for d in benign.domains()]
        if manifest.malicious_path is not None:
            malicious = domain_service.load_domain_list(manifest.malicious_path, LabelEnum.MALICIOUS, "malicious")
        else:
            malicious = charbot_service.generate_random_domains(
                manifest.malicious_count, manifest.malicious_seed, lengths
            )

        base = domain_service.merge(manifest.name, benign, malicious)
        base_train, base_test = domain_service.split_train_test(base, manifest.train_fraction, manifest.split_seed)
        augmentations = {a.name: self._adversarial_set(a, sources, lengths) for a in manifest.augmentations}
        tests = {t.name: self._adversarial_set(t, sources, lengths) for t in manifest.adversarial_tests}

        return self.run_experiment(
            base_train,
            base_test,
            augmentations,
            tests,
            manifest.model_kind,
            manifest.forest_seed,
            manifest.target_fprs,
            manifest.brf_trees,
            tld_ctx=tld_ctx,
        )

    # ================= RELATÓRIOS =================

    def emit_report(
        self,
        result: ExperimentResult,
        fmt: ReportFormatEnum,
        path: Path,
        cell: str = BASELINE,
    ) -> Path:
        fmt = ReportFormatEnum(fmt)
        if fmt == ReportFormatEnum.JSON:
            crud_report.save_json(path, result.matrix)
        elif fmt == ReportFormatEnum.CSV:
            crud_report.save_csv(path, result.matrix)
        else:
            if cell not in result.curves:
                raise InvalidParameters(f"célula '{cell}' sem curva ROC")
            crud_report.save_roc(path, result.curves[cell])
        return path

    def emit_bundle(self, result: ExperimentResult, out_dir: Path) -> List[Path]:
        """report.json, report.csv e roc_<célula>.csv para cada célula treinada."""
        written = [
            self.emit_report(result, ReportFormatEnum.JSON, out_dir / "report.json"),
            self.emit_report(result, ReportFormatEnum.CSV, out_dir / "report.csv"),
        ]
        for name in result.curves:
            written.append(self.emit_report(result, ReportFormatEnum.ROC, out_dir / f"roc_{name}.csv", name))
        return written


evaluation_service = EvaluationService()
