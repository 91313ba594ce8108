"""
Estruturas em memória dos modelos treinados.
"""

from app.models.forest import DecisionTree, ForestModel, InternalNode, LeafNode, TreeEntry, TreeNode
from app.models.matrix import FeatureMatrix
from app.models.bloom import TyposquatFilter
