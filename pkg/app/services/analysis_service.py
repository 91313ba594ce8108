import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import DegenerateData, DgalabError, EmptyDataset, InvalidParameters
from app.schemas.analysis import CompareFeatureEnum, DensityCurve, FeatureComparison, LengthStats
from app.schemas.domain import Dataset
from app.schemas.features import NgramTables
from app.services.feature_service import CONSONANTS, LETTERS, char_ratio, feature_service, run_ratio

logger = logging.getLogger('dgalab.analysis')

DEFAULT_GRID_POINTS = 512
MAX_GRID_POINTS = 20_000


class AnalysisService:
    """
    Comparação de distribuições de features por KDE e estatísticas de
    comprimento dos domínios.
    """

    def bandwidth(self, values: np.ndarray) -> float:
        """Regra de Silverman: 1.06·σ̂·n^(−1/5)."""
        return 1.06 * float(np.std(values, ddof=1)) * values.size ** (-0.2)

    def _grid_points(self, lo: float, hi: float, b: float) -> int:
        return max(DEFAULT_GRID_POINTS, min(MAX_GRID_POINTS, math.ceil((hi - lo) / (b / 4)) + 1))

    def kde(
        self,
        values: Sequence[float],
        grid_points: Optional[int] = None,
        feature: str = "",
        dataset: str = "",
        bounds: Optional[Tuple[float, float]] = None,
    ) -> DensityCurve:
        """
        Densidade com kernel gaussiano em grade uniforme.

        Sem `bounds`, a grade cobre [min − 4b, max + 4b]. Com `grid_points`
        a grade tem exatamente esse número de pontos; sem ele, pelo menos
        DEFAULT_GRID_POINTS, refinada até o passo ficar abaixo de b/4.

        Raises:
            DegenerateData: menos de 2 valores ou variância zero
            InvalidParameters: grid_points < 2
        """
        if grid_points is not None and grid_points < 2:
            raise InvalidParameters(f"grid_points deve ser >= 2: {grid_points}")
        x = np.asarray(values, dtype=np.float64)
        if x.size < 2 or float(np.std(x)) == 0.0:
            raise DegenerateData(f"distribuição degenerada para {feature or 'valores'} ({dataset or '-'})")
        b = self.bandwidth(x)
        lo, hi = bounds if bounds is not None else (float(x.min()) - 4 * b, float(x.max()) + 4 * b)
        if grid_points is None:
            points = self._grid_points(lo, hi, b)
        else:
            points = grid_points
        grid = np.linspace(lo, hi, points)

        densities = np.zeros(points, dtype=np.float64)
        norm = 1.0 / (x.size * b * math.sqrt(2 * math.pi))
        # Blocos de valores para limitar a matriz intermediária
        for start in range(0, x.size, 2048):
            z = (grid[:, None] - x[None, start:start + 2048]) / b
            densities += np.exp(-0.5 * z * z).sum(axis=1)
        densities *= norm

        return DensityCurve(
            feature=feature,
            dataset=dataset,
            grid=tuple(grid.tolist()),
            densities=tuple(densities.tolist()),
            bandwidth=b,
        )

    def integral(self, curve: DensityCurve) -> float:
        g = np.asarray(curve.grid)
        d = np.asarray(curve.densities)
        return float(np.sum((g[1:] - g[:-1]) * (d[1:] + d[:-1]) / 2.0))

    def l1_distance(self, a: DensityCurve, b: DensityCurve) -> float:
        """∫|f_a − f_b| na grade de `a` (b interpolada, zero fora da própria grade)."""
        grid = np.asarray(a.grid)
        fa = np.asarray(a.densities)
        fb = np.interp(grid, np.asarray(b.grid), np.asarray(b.densities), left=0.0, right=0.0)
        diff = np.abs(fa - fb)
        return float(np.sum((grid[1:] - grid[:-1]) * (diff[1:] + diff[:-1]) / 2.0))

    def length_stats(self, ds: Dataset) -> LengthStats:
        """Média e desvio populacional do comprimento renderizado (com o ponto)."""
        if len(ds) == 0:
            raise EmptyDataset(f"dataset '{ds.name}' vazio")
        lengths = np.asarray([len(r) for r in ds.rendered()], dtype=np.float64)
        return LengthStats(dataset=ds.name, mean=float(lengths.mean()), std=float(lengths.std()), count=lengths.size)

    def _extractor(self, feature: CompareFeatureEnum, tables: Optional[NgramTables]) -> Callable[[str], float]:
        feature = CompareFeatureEnum(feature)
        if feature in (CompareFeatureEnum.BIGRAM_MEDIAN, CompareFeatureEnum.TRIGRAM_MEDIAN):
            n = 2 if feature == CompareFeatureEnum.BIGRAM_MEDIAN else 3
            table = tables.get(n) if tables is not None else None
            if table is None:
                raise InvalidParameters(f"tabela de {n}-gramas necessária para {feature.value}")
            return lambda sld: feature_service.ngram_median(sld, table)
        return {
            CompareFeatureEnum.ENTROPY: feature_service.entropy,
            CompareFeatureEnum.GINI: feature_service.gini_index,
            CompareFeatureEnum.SYMBOL_RATIO: lambda sld: 1.0 - char_ratio(sld, LETTERS),
            CompareFeatureEnum.CONSEC_CONSONANT_RATIO: lambda sld: run_ratio(sld, CONSONANTS),
        }[feature]

    def feature_values(self, ds: Dataset, feature: CompareFeatureEnum, tables: Optional[NgramTables]) -> np.ndarray:
        """Valores da feature sobre os slds; slds curtos demais para a feature são ignorados."""
        extract = self._extractor(feature, tables)
        values = []
        for domain in ds.domains():
            try:
                values.append(extract(domain.sld))
            except DgalabError:
                continue
        return np.asarray(values, dtype=np.float64)

    def compare_features(
        self,
        datasets: Dict[str, Dataset],
        features: Sequence[CompareFeatureEnum] = tuple(CompareFeatureEnum),
        tables: Optional[NgramTables] = None,
        grid_points: Optional[int] = None,
    ) -> FeatureComparison:
        """
        Uma curva por (dataset, feature); as curvas de uma mesma feature
        compartilham a grade para permitir a distância L1.
        """
        comparison = FeatureComparison()
        for feature in features:
            feature = CompareFeatureEnum(feature)
            try:
                values = {name: self.feature_values(ds, feature, tables) for name, ds in datasets.items()}
            except DgalabError as e:
                for name in datasets:
                    comparison.failures[f"{name}:{feature.value}"] = e.message
                continue

            usable = {n: v for n, v in values.items() if v.size >= 2 and float(np.std(v)) > 0.0}
            bounds = None
            points = grid_points
            if usable:
                pad = 4 * max(self.bandwidth(v) for v in usable.values())
                bounds = (
                    min(float(v.min()) for v in usable.values()) - pad,
                    max(float(v.max()) for v in usable.values()) + pad,
                )
                if points is None:
                    # mesma grade para todos: passo guiado pela menor banda
                    finest = min(self.bandwidth(v) for v in usable.values())
                    points = self._grid_points(bounds[0], bounds[1], finest)
            for name, v in values.items():
                try:
                    comparison.curves.append(self.kde(v, points, feature.value, name, bounds))
                except DgalabError as e:
                    logger.warning(f"Curva {name}/{feature.value} não calculada: {e.message}")
                    comparison.failures[f"{name}:{feature.value}"] = e.message
                    if v.size >= 1 and float(np.std(v)) == 0.0:
                        comparison.point_masses[f"{name}:{feature.value}"] = float(v[0])
        logger.info(f"{len(comparison.curves)} curvas calculadas, {len(comparison.failures)} falhas")
        return comparison

    def reference_distance(
        self, comparison: FeatureComparison, reference: str, other: str, feature: str
    ) -> Optional[float]:
        """
        Distância L1 entre `other` e `reference` para uma feature.

        Uma distribuição concentrada num único valor fica à distância 2
        (o máximo) de qualquer densidade contínua, e a 0 ou 2 de outra
        massa pontual conforme o valor coincida. None quando um dos lados
        não tem curva nem massa pontual.
        """
        masses = comparison.point_masses
        ref_mass = masses.get(f"{reference}:{feature}")
        other_mass = masses.get(f"{other}:{feature}")
        if ref_mass is not None and other_mass is not None:
            return 0.0 if ref_mass == other_mass else 2.0
        try:
            ref_curve = comparison.curve(reference, feature)
        except KeyError:
            ref_curve = None
        try:
            other_curve = comparison.curve(other, feature)
        except KeyError:
            other_curve = None
        if ref_curve is not None and other_curve is not None:
            return self.l1_distance(ref_curve, other_curve)
        if (ref_curve is not None and other_mass is not None) or (other_curve is not None and ref_mass is not None):
            return 2.0
        return None


analysis_service = AnalysisService()
