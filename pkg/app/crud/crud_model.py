import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np

from app.core.exceptions import CorruptModel, DatasetIoError, VersionMismatch
from app.models.forest import LEAF, DecisionTree, ForestModel, TreeEntry
from app.schemas.features import SCHEMAS, FeatureSchemaEnum
from app.schemas.forest import CriterionEnum

logger = logging.getLogger('dgalab.crud_model')

MAGIC = "DGALAB-FOREST"
FORMAT_VERSION = 1


class CRUDModel:
    """
    Arquivo de modelo em texto, legível e comparável com diff.

    Layout (detalhado em FORMATS.md):
        DGALAB-FOREST 1
        schema <FANCI|BRF|FULL>
        trees <n>
        digest <hex>
        tree <idx> <gini|entropy> <c1,c2,...> <nós>
        I <coluna> <threshold em float.hex>      (nó interno, pré-ordem)
        L <fração em float.hex> <amostras>       (folha)
        ...
        end
    """

    def _preorder(self, tree: DecisionTree) -> List[int]:
        order = []
        stack = [0]
        while stack:
            i = stack.pop()
            order.append(i)
            if tree.feature[i] != LEAF:
                stack.append(int(tree.right[i]))
                stack.append(int(tree.left[i]))
        return order

    def dumps(self, model: ForestModel) -> str:
        lines = [
            f"{MAGIC} {FORMAT_VERSION}",
            f"schema {model.schema_name.value}",
            f"trees {model.tree_count}",
            f"digest {model.train_config_digest or '-'}",
        ]
        for idx, entry in enumerate(model.trees):
            tree = entry.tree
            subset = ",".join(str(c) for c in entry.feature_subset)
            lines.append(f"tree {idx} {entry.criterion.value} {subset} {tree.node_count}")
            for i in self._preorder(tree):
                if tree.feature[i] == LEAF:
                    lines.append(f"L {float(tree.value[i]).hex()} {int(tree.n_samples[i])}")
                else:
                    lines.append(f"I {int(tree.feature[i])} {float(tree.threshold[i]).hex()}")
        lines.append("end")
        return "\n".join(lines) + "\n"

    def save(self, path: Path, model: ForestModel) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            path.write_text(self.dumps(model), encoding="utf-8")
        except OSError as e:
            raise DatasetIoError(f"Erro ao gravar modelo '{path}': {e}") from e
        logger.info(f"Modelo salvo em {path} ({model.tree_count} árvores)")

    def _parse_tree(self, lines: List[str], pos: int, node_count: int) -> Tuple[DecisionTree, int]:
        feature = np.full(node_count, LEAF, dtype=np.int64)
        threshold = np.zeros(node_count, dtype=np.float64)
        left = np.full(node_count, -1, dtype=np.int64)
        right = np.full(node_count, -1, dtype=np.int64)
        value = np.zeros(node_count, dtype=np.float64)
        n_samples = np.zeros(node_count, dtype=np.int64)

        # Pilha de nós internos aguardando o filho direito
        pending: List[int] = []
        for i in range(node_count):
            if pos >= len(lines):
                raise CorruptModel("Arquivo de modelo truncado")
            parts = lines[pos].split()
            pos += 1
            if i > 0:
                if not pending:
                    raise CorruptModel("Estrutura de árvore inválida")
                parent = pending[-1]
                if left[parent] == -1:
                    left[parent] = i
                else:
                    right[parent] = i
                    pending.pop()
            if parts[0] == "I" and len(parts) == 3:
                feature[i] = int(parts[1])
                threshold[i] = float.fromhex(parts[2])
                pending.append(i)
            elif parts[0] == "L" and len(parts) == 3:
                value[i] = float.fromhex(parts[1])
                n_samples[i] = int(parts[2])
                if not 0.0 <= value[i] <= 1.0:
                    raise CorruptModel(f"Fração de folha fora de [0,1]: {value[i]}")
            else:
                raise CorruptModel(f"Linha de nó inválida: {lines[pos - 1]!r}")
        if pending:
            raise CorruptModel("Árvore incompleta")
        return DecisionTree(feature, threshold, left, right, value, n_samples), pos

    def loads(self, text: str) -> ForestModel:
        lines = text.splitlines()
        try:
            magic, version = lines[0].split()
        except (IndexError, ValueError):
            raise CorruptModel("Cabeçalho do modelo ausente")
        if magic != MAGIC:
            raise CorruptModel(f"Assinatura desconhecida: {magic!r}")
        if not version.isdigit() or int(version) != FORMAT_VERSION:
            raise VersionMismatch(f"Versão de modelo {version} não suportada (esperado {FORMAT_VERSION})")

        try:
            schema_name = FeatureSchemaEnum(lines[1].split()[1])
            tree_count = int(lines[2].split()[1])
            digest = lines[3].split()[1]
            width = SCHEMAS[schema_name].width
            pos = 4
            trees = []
            for idx in range(tree_count):
                if pos >= len(lines):
                    raise CorruptModel("Arquivo de modelo truncado")
                _, tree_idx, criterion, subset, node_count = lines[pos].split()
                if int(tree_idx) != idx:
                    raise CorruptModel(f"Árvore fora de ordem: {tree_idx}")
                pos += 1
                tree, pos = self._parse_tree(lines, pos, int(node_count))
                columns = tuple(int(c) for c in subset.split(","))
                if any(not 0 <= c < width for c in columns) or any(c not in columns for c in tree.columns()):
                    raise CorruptModel(f"Árvore {idx} referencia colunas inválidas")
                trees.append(TreeEntry(tree, CriterionEnum(criterion), columns))
        except CorruptModel:
            raise
        except (IndexError, ValueError) as e:
            raise CorruptModel(f"Modelo corrompido: {e}") from e

        if pos >= len(lines) or lines[pos] != "end" or tree_count < 1:
            raise CorruptModel("Arquivo de modelo truncado")
        return ForestModel(schema_name, trees, "" if digest == "-" else digest)

    def load(self, path: Path) -> ForestModel:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise DatasetIoError(f"Erro ao ler modelo '{path}': {e}") from e
        return self.loads(text)


model = CRUDModel()
