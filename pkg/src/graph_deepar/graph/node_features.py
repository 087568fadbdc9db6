"""
窗口節點特徵
============

錨點 t 的窗口對每個步驟 t′ ∈ [t−P+1, t] 產生節點特徵：
t′ 結尾的 node_lag_depth 個需求滯後值，加上歸一化的度數通道。
"""

import threading
from dataclasses import dataclass, field

import numpy as np

from ..data.panel import PanelDataset
from ..debug import graph_debug_log as debug_log
from ..exceptions import DataValidationError, ShapeMismatchError
from .similarity import SimilarityGraph


@dataclass
class DemandAccessAudit:
    """
    需求讀取審計

    記錄每次節點特徵組裝讀到的最晚週與所屬錨點；讀到錨點之後的週即為洩漏。
    """

    reads: int = 0
    violations: list[tuple[int, int]] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def record(self, anchor: int, latest_week: int) -> None:
        with self._lock:
            self.reads += 1
            if latest_week > anchor:
                self.violations.append((anchor, latest_week))

    @property
    def clean(self) -> bool:
        return not self.violations


@dataclass(frozen=True, eq=False)
class NodeFeatureWindow:
    """N×P×F 節點特徵；mask 標記每個滯後值是否為觀測值"""

    anchor: int
    values: np.ndarray
    mask: np.ndarray
    node_lag_depth: int

    @property
    def P(self) -> int:
        return int(self.values.shape[1])

    @property
    def n_features(self) -> int:
        return int(self.values.shape[2])

    def weeks(self) -> range:
        return range(self.anchor - self.P + 1, self.anchor + 1)


def normalized_degree(graph: SimilarityGraph) -> np.ndarray:
    """儲存圖度數 / max(1, 最大度數)"""
    degree = graph.degree.astype(np.float64)
    return degree / max(1.0, float(degree.max(initial=0.0)))


def window_node_features(
    graph: SimilarityGraph,
    data: PanelDataset,
    anchor: int,
    P: int,
    node_lag_depth: int = 1,
    audit: DemandAccessAudit | None = None,
) -> NodeFeatureWindow:
    """
    組裝錨點 anchor（0 起算）的窗口節點特徵

    步驟 t′ 的第 i 行為 (y_i^{t′−lag+1}, …, y_i^{t′}, 歸一化度數)；
    未觀測的週填 0 且 mask 為 False。度數通道取自儲存圖，不受採樣影響。
    """
    if graph.n_nodes != data.n_articles:
        raise ShapeMismatchError(
            "graph nodes vs panel articles", graph.n_nodes, data.n_articles
        )
    if P < 1 or node_lag_depth < 1:
        raise DataValidationError(
            f"P and node_lag_depth must be ≥ 1, got P={P}, "
            f"node_lag_depth={node_lag_depth}"
        )
    earliest = anchor - P - node_lag_depth + 2
    if earliest < 0 or anchor >= data.n_weeks:
        raise DataValidationError(
            f"anchor {anchor} out of range for P={P}, node_lag_depth={node_lag_depth}, "
            f"T={data.n_weeks}",
            anchor=anchor,
        )

    # lag_weeks[p, l]：步驟 p 的第 l 個滯後（由舊到新）
    steps = np.arange(anchor - P + 1, anchor + 1)
    lag_weeks = steps[:, None] + np.arange(-node_lag_depth + 1, 1)[None, :]
    observed = data.availability_mask[:, lag_weeks]
    lags = np.where(observed, data.demand[:, lag_weeks], 0.0)

    if audit is not None:
        audit.record(anchor, int(lag_weeks.max()))

    degree = np.broadcast_to(
        normalized_degree(graph)[:, None, None], (data.n_articles, P, 1)
    )
    values = np.concatenate([lags, degree], axis=2)
    debug_log(f"節點特徵: anchor={anchor}, 形狀 {values.shape}")
    return NodeFeatureWindow(
        anchor=anchor, values=values, mask=observed, node_lag_depth=node_lag_depth
    )
