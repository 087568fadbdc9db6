"""圖統計"""

from dataclasses import asdict, dataclass

import numpy as np

from .similarity import SimilarityGraph


@dataclass(frozen=True)
class GraphStats:
    n_nodes: int
    edge_count: int
    mean_degree: float
    degree_std: float
    isolated_fraction: float
    max_degree: int

    def as_dict(self) -> dict[str, float | int]:
        return asdict(self)

    def render(self) -> str:
        return (
            f"nodes={self.n_nodes} edges={self.edge_count} "
            f"mean_degree={self.mean_degree:.4f} degree_std={self.degree_std:.4f} "
            f"isolated_fraction={self.isolated_fraction:.4f} max_degree={self.max_degree}"
        )


def graph_stats(graph: SimilarityGraph) -> GraphStats:
    """儲存度數上的精確統計（母體標準差）"""
    degree = graph.degree.astype(np.float64)
    if degree.size == 0:
        return GraphStats(0, 0, 0.0, 0.0, 0.0, 0)
    return GraphStats(
        n_nodes=graph.n_nodes,
        edge_count=graph.n_edges,
        mean_degree=float(degree.mean()),
        degree_std=float(degree.std()),
        isolated_fraction=float((degree == 0).mean()),
        max_degree=int(degree.max()),
    )
