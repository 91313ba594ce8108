import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import DegenerateData, SchemaMismatch, SingleClassData
from app.crud import model as crud_model
from app.models.forest import LEAF, DecisionTree, ForestModel, TreeEntry
from app.models.matrix import FeatureMatrix
from app.schemas.features import SCHEMAS, FeatureSchemaEnum, FeatureVector
from app.schemas.forest import CriterionEnum, ForestKindEnum, TrainConfig

logger = logging.getLogger('dgalab.forest')

# Ganhos mais próximos que isto são tratados como empate
GAIN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


def _binary_impurity(p: np.ndarray, criterion: CriterionEnum) -> np.ndarray:
    """Impureza vetorizada a partir da fração da classe positiva."""
    if criterion == CriterionEnum.GINI:
        return 1.0 - p ** 2 - (1.0 - p) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        q = 1.0 - p
        h = -np.where(p > 0, p * np.log2(p), 0.0) - np.where(q > 0, q * np.log2(q), 0.0)
    return h


class ForestService:
    """
    Indução CART e as duas florestas (FANCI e B-RF).
    """

    def impurity(self, counts: Sequence[int], criterion: CriterionEnum) -> float:
        """Gini = 1 − Σ p²; entropia = −Σ p log₂ p (0·log 0 = 0)."""
        total = sum(counts)
        if total < 1:
            raise DegenerateData("impureza de nó vazio")
        probs = [c / total for c in counts]
        if CriterionEnum(criterion) == CriterionEnum.GINI:
            return float(1.0 - sum(p * p for p in probs))
        return float(max(0.0, -sum(p * np.log2(p) for p in probs if p > 0)))

    def best_split(
        self,
        X: np.ndarray,
        y: np.ndarray,
        columns: Sequence[int],
        criterion: CriterionEnum,
        min_samples_leaf: int = 1,
    ) -> Optional[Split]:
        """
        Melhor corte (coluna, threshold) por redução de impureza.

        Thresholds são pontos médios entre valores distintos consecutivos.
        Empates: menor coluna, depois menor threshold. Retorna None se
        nenhum corte respeita min_samples_leaf.
        """
        n = y.shape[0]
        parent = _binary_impurity(np.array([y.mean()]), criterion)[0]
        best: Optional[Split] = None
        for col in sorted(columns):
            order = np.argsort(X[:, col], kind="stable")
            xs = X[order, col]
            ys = y[order]
            n_left = np.arange(1, n)
            valid = (xs[:-1] != xs[1:]) & (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
            if not valid.any():
                continue
            pos_left = np.cumsum(ys)[:-1]
            pos_total = ys.sum()
            p_left = pos_left / n_left
            p_right = (pos_total - pos_left) / (n - n_left)
            weighted = (n_left * _binary_impurity(p_left, criterion)
                        + (n - n_left) * _binary_impurity(p_right, criterion)) / n
            gains = np.where(valid, parent - weighted, -np.inf)
            top = gains.max()
            i = int(np.flatnonzero(gains >= top - GAIN_TOLERANCE)[0])
            if best is None or gains[i] > best.gain + GAIN_TOLERANCE:
                threshold = (xs[i] + xs[i + 1]) / 2.0
                if threshold >= xs[i + 1]:
                    threshold = xs[i]
                best = Split(int(col), float(threshold), float(gains[i]))
        return best

    def train_tree(
        self,
        X: np.ndarray,
        y: np.ndarray,
        feature_subset: Sequence[int],
        criterion: CriterionEnum,
        max_depth: Optional[int] = None,
        min_samples_leaf: int = 1,
    ) -> DecisionTree:
        """
        Árvore CART com nós em pré-ordem.

        Para em nó puro, em max_depth ou quando não há corte válido.
        Linhas idênticas com rótulos mistos viram uma folha.
        """
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if y.shape[0] == 0:
            raise DegenerateData("treino de árvore sem linhas")

        feature: List[int] = []
        threshold: List[float] = []
        left: List[int] = []
        right: List[int] = []
        value: List[float] = []
        n_samples: List[int] = []

        # (índices das linhas, profundidade, pai, lado)
        stack: List[Tuple[np.ndarray, int, int, str]] = [(np.arange(y.shape[0]), 0, -1, "")]
        while stack:
            idx, depth, parent, side = stack.pop()
            node = len(feature)
            if parent >= 0:
                if side == "left":
                    left[parent] = node
                else:
                    right[parent] = node

            y_node = y[idx]
            positives = int(y_node.sum())
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(positives / idx.shape[0])
            n_samples.append(int(idx.shape[0]))

            if positives in (0, idx.shape[0]) or (max_depth is not None and depth >= max_depth):
                continue
            if idx.shape[0] < 2 * min_samples_leaf:
                continue
            split = self.best_split(X[idx], y_node, feature_subset, criterion, min_samples_leaf)
            if split is None:
                continue

            feature[node] = split.feature
            threshold[node] = split.threshold
            goes_left = X[idx, split.feature] <= split.threshold
            stack.append((idx[~goes_left], depth + 1, node, "right"))
            stack.append((idx[goes_left], depth + 1, node, "left"))

        return DecisionTree(
            feature=np.asarray(feature, dtype=np.int64),
            threshold=np.asarray(threshold, dtype=np.float64),
            left=np.asarray(left, dtype=np.int64),
            right=np.asarray(right, dtype=np.int64),
            value=np.asarray(value, dtype=np.float64),
            n_samples=np.asarray(n_samples, dtype=np.int64),
        )

    def train_forest(self, rows: FeatureMatrix, config: TrainConfig) -> ForestModel:
        """
        Cada árvore usa um gerador próprio derivado de (seed, índice):
        primeiro o tamanho do subconjunto, depois as colunas e o bootstrap.
        """
        if rows.rows == 0:
            raise DegenerateData("matriz de treino vazia")
        y = rows.y.astype(np.int64)
        if np.unique(y).size < 2:
            raise SingleClassData("dados de treino com uma única classe")
        width = SCHEMAS[rows.schema_name].width
        if config.max_features > width:
            raise SchemaMismatch(f"max_features={config.max_features} maior que a largura {width}")

        trees = []
        for tree_idx, criterion in enumerate(config.criteria):
            rng = np.random.default_rng([config.seed, tree_idx])
            size = int(rng.integers(config.min_features, config.max_features + 1))
            subset = tuple(sorted(int(c) for c in rng.choice(width, size=size, replace=False)))
            if config.bootstrap:
                sample = rng.integers(0, rows.rows, size=rows.rows)
            else:
                sample = np.arange(rows.rows)
            tree = self.train_tree(
                rows.X[sample],
                y[sample],
                subset,
                criterion,
                config.max_depth,
                config.min_samples_leaf,
            )
            trees.append(TreeEntry(tree, criterion, subset))
            logger.debug(f"Árvore {tree_idx} ({criterion.value}): {tree.node_count} nós, {len(subset)} features")

        logger.info(f"Floresta treinada: {len(trees)} árvores sobre {rows.rows} linhas")
        return ForestModel(rows.schema_name, trees, config.digest())

    def _expect_schema(self, rows: FeatureMatrix, expected: FeatureSchemaEnum) -> None:
        if rows.schema_name != expected:
            raise SchemaMismatch(f"matriz no esquema {rows.schema_name.value}, esperado {expected.value}")

    def train_fanci(self, rows: FeatureMatrix, seed: int) -> ForestModel:
        """9 árvores (7 Gini, 2 entropia), 2 a 18 features por árvore, bootstrap."""
        self._expect_schema(rows, FeatureSchemaEnum.FANCI)
        return self.train_forest(rows, TrainConfig.fanci(seed))

    def train_brf(self, rows: FeatureMatrix, seed: int, tree_count: int = 100) -> ForestModel:
        """Árvores por entropia com min(20, largura) features cada, bootstrap."""
        self._expect_schema(rows, FeatureSchemaEnum.BRF)
        width = SCHEMAS[FeatureSchemaEnum.BRF].width
        return self.train_forest(rows, TrainConfig.brf(seed, width, tree_count))

    def train(self, kind: ForestKindEnum, rows: FeatureMatrix, seed: int, tree_count: Optional[int] = None) -> ForestModel:
        if ForestKindEnum(kind) == ForestKindEnum.FANCI:
            return self.train_fanci(rows, seed)
        return self.train_brf(rows, seed, tree_count or 100)

    def score(self, model: ForestModel, fv: FeatureVector) -> float:
        """Média das frações maliciosas das folhas alcançadas."""
        if fv.schema_name != model.schema_name:
            raise SchemaMismatch(f"vetor no esquema {fv.schema_name.value}, modelo em {model.schema_name.value}")
        return float(model.predict_proba(np.asarray(fv.values))[0])

    def score_matrix(self, model: ForestModel, rows: FeatureMatrix) -> np.ndarray:
        if rows.schema_name != model.schema_name:
            raise SchemaMismatch(f"matriz no esquema {rows.schema_name.value}, modelo em {model.schema_name.value}")
        if rows.rows == 0:
            return np.zeros(0, dtype=np.float64)
        return model.predict_proba(rows.X)

    def save_model(self, path: Path, model: ForestModel) -> None:
        crud_model.save(path, model)

    def load_model(self, path: Path) -> ForestModel:
        return crud_model.load(path)


forest_service = ForestService()
