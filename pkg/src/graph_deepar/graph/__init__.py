"""
圖模組
======

文章相似度圖的建立、鄰域採樣、窗口節點特徵與統計。
"""

from .node_features import (
    DemandAccessAudit,
    NodeFeatureWindow,
    normalized_degree,
    window_node_features,
)
from .sampling import epoch_seed, sample_neighborhood
from .similarity import (
    SIMILARITY_TOLERANCE,
    SimilarityBlock,
    SimilarityGraph,
    build_graph,
    graph_from_features,
    load_graph,
    pairwise_similarity,
    save_graph,
)
from .stats import GraphStats, graph_stats


__all__ = [
    "SIMILARITY_TOLERANCE",
    "DemandAccessAudit",
    "GraphStats",
    "NodeFeatureWindow",
    "SimilarityBlock",
    "SimilarityGraph",
    "build_graph",
    "epoch_seed",
    "graph_from_features",
    "graph_stats",
    "load_graph",
    "normalized_degree",
    "pairwise_similarity",
    "sample_neighborhood",
    "save_graph",
    "window_node_features",
]
