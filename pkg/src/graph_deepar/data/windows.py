"""
滑動窗口
========

每個窗口由 (文章索引, 錨點週 t) 描述：上下文為 [t−P+1, t]，
預測區間為 [t+1, t+K]。輸出按 (錨點, 文章) 排序。
"""

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from ..debug import data_debug_log as debug_log
from ..debug import warn_data_quality
from ..exceptions import ConfigurationError
from .panel import PanelDataset


@dataclass(frozen=True)
class WindowSet:
    """窗口集合"""

    article_index: np.ndarray
    anchor: np.ndarray
    context_length: int
    horizon: int

    def __len__(self) -> int:
        return int(self.article_index.shape[0])

    @property
    def entries(self) -> list[tuple[int, range, range]]:
        """(文章索引, 上下文範圍, 預測範圍)"""
        return [
            (int(i), self.context_range(int(t)), self.horizon_range(int(t)))
            for i, t in zip(self.article_index, self.anchor, strict=True)
        ]

    def context_range(self, anchor: int) -> range:
        return range(anchor - self.context_length + 1, anchor + 1)

    def horizon_range(self, anchor: int) -> range:
        return range(anchor + 1, anchor + self.horizon + 1)

    def anchors(self) -> np.ndarray:
        return np.unique(self.anchor)

    def subset(self, positions: np.ndarray) -> "WindowSet":
        return WindowSet(
            article_index=self.article_index[positions],
            anchor=self.anchor[positions],
            context_length=self.context_length,
            horizon=self.horizon,
        )


def _full_runs(mask: np.ndarray, width: int) -> np.ndarray:
    """runs[i, s] 為真若 mask[i, s:s+width] 全部可用"""
    n, t = mask.shape
    if width > t:
        return np.zeros((n, 0), dtype=bool)
    cumulative = np.concatenate(
        [np.zeros((n, 1), dtype=np.int64), np.cumsum(mask, axis=1, dtype=np.int64)],
        axis=1,
    )
    return (cumulative[:, width:] - cumulative[:, :-width]) == width


def make_windows(
    data: PanelDataset,
    P: int,
    K: int,
    anchors: Iterable[int] | None = None,
    require_horizon: bool = True,
    extra_history: int = 0,
) -> WindowSet:
    """
    枚舉所有完整可用的窗口

    Args:
        data: 面板數據（預測區間必須落在 data 擁有的週內）
        P: 上下文長度
        K: 預測步數
        anchors: 只考慮這些錨點（0 起算）；None 表示全部
        require_horizon: False 時只要求上下文可用，預測區間可超出 T
            （受 data.future_steps 限制），用於產生預測起點
        extra_history: 上下文之前額外需要存在的週數（圖節點特徵的多階滯後）

    Returns:
        WindowSet: 按 (錨點, 文章) 排序
    """
    if P < 1 or K < 1 or extra_history < 0:
        raise ConfigurationError(
            f"invalid window shape P={P}, K={K}, extra_history={extra_history}"
        )

    n, t = data.n_articles, data.n_weeks
    mask = data.availability_mask
    width = P + K if require_horizon else P
    runs = _full_runs(mask, width)

    # 錨點 t 對應的起點 s = t − P + 1
    first_anchor = max(P - 1 + extra_history, data.span_start - 1)
    if require_horizon:
        last_anchor = t - K - 1
    else:
        last_anchor = min(t - 1, t - 1 + data.future_steps - K)
    candidate = np.arange(first_anchor, last_anchor + 1)
    if anchors is not None:
        wanted = np.asarray(sorted(set(int(a) for a in anchors)), dtype=np.int64)
        candidate = np.intersect1d(candidate, wanted)

    article_parts: list[np.ndarray] = []
    anchor_parts: list[np.ndarray] = []
    for anchor in candidate:
        start = anchor - P + 1
        if start >= runs.shape[1]:
            continue
        valid = np.flatnonzero(runs[:, start])
        if valid.size:
            article_parts.append(valid.astype(np.int64))
            anchor_parts.append(np.full(valid.size, anchor, dtype=np.int64))

    if article_parts:
        windows = WindowSet(
            article_index=np.concatenate(article_parts),
            anchor=np.concatenate(anchor_parts),
            context_length=P,
            horizon=K,
        )
    else:
        windows = WindowSet(
            article_index=np.zeros(0, dtype=np.int64),
            anchor=np.zeros(0, dtype=np.int64),
            context_length=P,
            horizon=K,
        )

    if len(windows) == 0:
        warn_data_quality(
            f"no valid windows for P={P}, K={K} over {n} articles and {t} weeks"
        )
    else:
        debug_log(f"產生 {len(windows)} 個窗口 (P={P}, K={K})")
    return windows


def rolling_origins(span_start: int, n_weeks: int, horizon: int) -> list[int]:
    """
    評估切分的滾動預測起點（0 起算的錨點）

    從切分第一週之前開始每 horizon 週一個起點；若最後幾週不足一個完整步長，
    追加錨點 n_weeks−1−horizon，使每個評估週至少被一個起點覆蓋。

    Args:
        span_start: 切分中第一個評估週的 0 起算索引
        n_weeks: 面板總週數
        horizon: 預測步數 K
    """
    if horizon < 1:
        raise ConfigurationError(f"horizon must be ≥ 1, got {horizon}")
    first = span_start - 1
    last = n_weeks - 1 - horizon
    if first < 0 or last < first:
        raise ConfigurationError(
            f"evaluation span of {n_weeks - span_start} weeks is shorter than "
            f"horizon {horizon}"
        )
    origins = list(range(first, last + 1, horizon))
    if origins[-1] != last:
        origins.append(last)
    debug_log(f"滾動起點 {len(origins)} 個 (K={horizon})")
    return origins
