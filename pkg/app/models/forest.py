from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np

from app.schemas.features import FeatureSchemaEnum
from app.schemas.forest import CriterionEnum

LEAF = -1


@dataclass(frozen=True)
class InternalNode:
    """Nó interno: valor <= threshold segue para a esquerda."""
    feature: int
    threshold: float
    left: int
    right: int


@dataclass(frozen=True)
class LeafNode:
    malicious_fraction: float
    sample_count: int


TreeNode = Union[InternalNode, LeafNode]


@dataclass
class DecisionTree:
    """
    Árvore CART em arrays planos, nós numerados em pré-ordem.

    `feature[i] == LEAF` marca folha; índices de feature são colunas do
    esquema completo (não do subconjunto da árvore).
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def node_count(self) -> int:
        return int(self.feature.shape[0])

    @property
    def root(self) -> TreeNode:
        return self.node(0)

    def node(self, i: int) -> TreeNode:
        if self.feature[i] == LEAF:
            return LeafNode(float(self.value[i]), int(self.n_samples[i]))
        return InternalNode(int(self.feature[i]), float(self.threshold[i]), int(self.left[i]), int(self.right[i]))

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            i, d = stack.pop()
            if self.feature[i] == LEAF:
                best = max(best, d)
            else:
                stack.append((int(self.left[i]), d + 1))
                stack.append((int(self.right[i]), d + 1))
        return best

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Índice da folha alcançada por cada linha de X."""
        X = np.atleast_2d(X)
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[nodes] != LEAF
        while active.any():
            idx = rows[active]
            current = nodes[idx]
            go_left = X[idx, self.feature[current]] <= self.threshold[current]
            nodes[idx] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[nodes] != LEAF
        return nodes

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def columns(self) -> List[int]:
        return sorted({int(f) for f in self.feature if f != LEAF})


@dataclass
class TreeEntry:
    tree: DecisionTree
    criterion: CriterionEnum
    feature_subset: Tuple[int, ...]


@dataclass
class ForestModel:
    """
    Floresta treinada: árvores com critério e subconjunto de features.
    """
    schema_name: FeatureSchemaEnum
    trees: List[TreeEntry] = field(default_factory=list)
    train_config_digest: str = ""

    @property
    def tree_count(self) -> int:
        return len(self.trees)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Média das frações maliciosas das folhas alcançadas (voto suave)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        total = np.zeros(X.shape[0], dtype=np.float64)
        for entry in self.trees:
            total += entry.tree.predict(X)
        return total / len(self.trees)
