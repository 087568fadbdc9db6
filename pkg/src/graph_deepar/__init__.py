#!/usr/bin/env python3
"""
graph-deepar
============

以文章相似度圖增強的全域自回歸 Student-t 需求預測。

特色：
- 依靜態屬性餘弦相似度建圖（分塊計算、閾值 τ、鄰域取樣）
- 圖編碼器（自環均值聚合）為每週產生節點嵌入
- DeepAR 風格 LSTM 解碼器輸出 Student-t 分佈，取樣得到分位數預測
- 同步批次訓練與早停、分組評估（冷啟動、有連邊、銷量前 n）
- 合成面板生成與命令列流程
"""

__version__ = "0.3.0"
__author__ = "graph-deepar maintainers"

from .config import RunConfig, load_config
from .data import PanelDataset, SplitSpec, WindowSet, load_panel, make_windows, split_time
from .evaluation import MetricsReport, compare_models, compute_metrics, group_report
from .graph import SimilarityGraph, build_graph, graph_stats, pairwise_similarity
from .models import GraphDeepAR, forecast_quantiles, sample_forecast
from .training import Checkpoint, TrainConfig, train


__all__ = [
    "Checkpoint",
    "GraphDeepAR",
    "MetricsReport",
    "PanelDataset",
    "RunConfig",
    "SimilarityGraph",
    "SplitSpec",
    "TrainConfig",
    "WindowSet",
    "__author__",
    "__version__",
    "build_graph",
    "compare_models",
    "compute_metrics",
    "forecast_quantiles",
    "graph_stats",
    "group_report",
    "load_config",
    "load_panel",
    "make_windows",
    "main",
    "pairwise_similarity",
    "sample_forecast",
    "split_time",
    "train",
]


def main() -> int:
    """主要入口點"""
    from .__main__ import main as cli_main

    return cli_main()
