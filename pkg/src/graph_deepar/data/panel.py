"""
面板數據集
==========

PanelDataset 保存每篇文章的週需求序列、靜態特徵 X、已知的動態特徵 Z
與可用性遮罩，並提供讀取、時間切分、冷啟動標記等操作。

時間索引在內部一律為 0 起算；對外 API 中的 `at_week` 為 1 起算。
"""

from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from ..debug import data_debug_log as debug_log
from ..exceptions import ConfigurationError, DataValidationError, ShapeMismatchError
from .schema import FeatureSchema, StaticFeatureEncoder


N_CALENDAR_FEATURES = 4


@dataclass(frozen=True)
class SplitSpec:
    """時間切分設定"""

    test_weeks: int = 26
    val_weeks: int = 13

    def __post_init__(self) -> None:
        if self.test_weeks < 1 or self.val_weeks < 1:
            raise ConfigurationError(
                f"split weeks must be positive, got test={self.test_weeks}, "
                f"val={self.val_weeks}"
            )

    def validate_against(self, n_weeks: int) -> None:
        if n_weeks <= self.test_weeks + self.val_weeks:
            raise ConfigurationError(
                f"timeline of {n_weeks} weeks is too short for "
                f"test_weeks={self.test_weeks} + val_weeks={self.val_weeks}"
            )


@dataclass(frozen=True)
class PanelDataset:
    """
    文章 × 週 的需求面板

    demand 與 availability_mask 形狀為 N×T；dynamic_features 為
    N×L×(T+future_steps)。span_start 之前的週只作為唯讀歷史。
    """

    article_ids: list[str]
    demand: np.ndarray
    static_features: np.ndarray
    dynamic_features: np.ndarray
    timeline: list
    availability_mask: np.ndarray
    span_start: int = 0
    future_steps: int = 0
    schema_hash: str | None = None
    name: str = "panel"
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        n, t = self.demand.shape
        if len(self.article_ids) != n:
            raise ShapeMismatchError("article_ids vs demand rows", len(self.article_ids), n)
        if len(set(self.article_ids)) != n:
            raise DataValidationError("article_ids must be unique")
        if self.availability_mask.shape != (n, t):
            raise ShapeMismatchError(
                "availability_mask vs demand", self.availability_mask.shape, (n, t)
            )
        if self.static_features.ndim != 2 or self.static_features.shape[0] != n:
            raise ShapeMismatchError(
                "static_features rows vs N", self.static_features.shape, n
            )
        expected_dynamic = t + self.future_steps
        if (
            self.dynamic_features.ndim != 3
            or self.dynamic_features.shape[0] != n
            or self.dynamic_features.shape[2] != expected_dynamic
        ):
            raise ShapeMismatchError(
                "dynamic_features vs N×L×(T+future_steps)",
                self.dynamic_features.shape,
                (n, "L", expected_dynamic),
            )
        if len(self.timeline) != t:
            raise ShapeMismatchError("timeline vs T", len(self.timeline), t)
        observed = self.demand[self.availability_mask]
        if not np.all(np.isfinite(observed)) or np.any(observed < 0):
            raise DataValidationError(
                "demand must be finite and non-negative where observed"
            )
        if not 0 <= self.span_start < max(t, 1):
            raise ConfigurationError(f"span_start {self.span_start} outside [0, {t})")

    @property
    def n_articles(self) -> int:
        return int(self.demand.shape[0])

    @property
    def n_weeks(self) -> int:
        return int(self.demand.shape[1])

    @property
    def n_static(self) -> int:
        return int(self.static_features.shape[1])

    @property
    def n_dynamic(self) -> int:
        return int(self.dynamic_features.shape[1])

    @property
    def owned_weeks(self) -> range:
        """本切分擁有（評估）的週索引"""
        return range(self.span_start, self.n_weeks)

    def week_label(self, index: int) -> object:
        """週索引轉標籤；超出 T 的未來週依等距時間線外推"""
        if index < self.n_weeks:
            return self.timeline[index]
        last = self.timeline[-1]
        ahead = index - self.n_weeks + 1
        if isinstance(last, str):
            date = pd.Timestamp(last) + pd.Timedelta(weeks=ahead)
            return date.strftime("%Y-%m-%d")
        return last + ahead

    def article_index(self) -> dict[str, int]:
        return {article: i for i, article in enumerate(self.article_ids)}


def calendar_features(timeline: Sequence, future_steps: int = 0) -> np.ndarray:
    """
    產生日曆動態特徵（L=4）

    週序 sin/cos、月內日代理值 /31、標準化週編號。
    整數時間線以 52 週為一年、每週 7 天推算月內日。

    Returns:
        np.ndarray: L×(T+future_steps)
    """
    total = len(timeline) + future_steps
    if total == 0:
        return np.zeros((N_CALENDAR_FEATURES, 0))
    if len(timeline) and isinstance(timeline[0], str):
        dates = pd.date_range(pd.Timestamp(timeline[0]), periods=total, freq="7D")
        week_of_year = dates.isocalendar().week.to_numpy(dtype=np.float64)
        day_of_month = dates.day.to_numpy(dtype=np.float64)
    else:
        start = int(timeline[0]) if len(timeline) else 1
        labels = np.arange(start, start + total, dtype=np.int64)
        week_of_year = ((labels - 1) % 52 + 1).astype(np.float64)
        day_of_month = (((labels - 1) * 7) % 31 + 1).astype(np.float64)
    angle = 2.0 * np.pi * week_of_year / 52.0
    week_number = np.arange(total, dtype=np.float64) / max(total - 1, 1)
    return np.vstack([np.sin(angle), np.cos(angle), day_of_month / 31.0, week_number])


def _parse_weeks(weeks: pd.Series) -> tuple[pd.Series, list]:
    """週欄位解析為整數索引或 ISO 日期，並建立共同等距時間線"""
    numeric = pd.to_numeric(weeks, errors="coerce")
    if numeric.notna().all():
        values = numeric.astype(np.int64)
        if (numeric != values).any():
            raise DataValidationError("integer week indices must be whole numbers")
        timeline = list(range(int(values.min()), int(values.max()) + 1))
        positions = values - int(values.min())
        return positions, timeline

    try:
        dates = pd.to_datetime(weeks, errors="raise")
    except (ValueError, TypeError) as e:
        raise DataValidationError(f"week column is neither integer nor ISO date: {e}") from e
    start = dates.min()
    offsets = (dates - start).dt.days
    off_grid = offsets % 7 != 0
    if off_grid.any():
        rows = (np.flatnonzero(off_grid.to_numpy()) + 2).tolist()[:10]
        raise DataValidationError(
            f"weeks are not on a uniform weekly grid (file rows {rows})"
        )
    positions = (offsets // 7).astype(np.int64)
    n_weeks = int(positions.max()) + 1
    timeline = [
        d.strftime("%Y-%m-%d")
        for d in pd.date_range(start, periods=n_weeks, freq="7D")
    ]
    return positions, timeline


def load_panel(
    demand_file: Path | str,
    static_file: Path | str,
    schema: FeatureSchema,
    min_demand_std: float | None = None,
    future_steps: int = 0,
    name: str = "panel",
) -> PanelDataset:
    """
    讀取需求文件與靜態屬性文件並建立驗證過的 PanelDataset

    Args:
        demand_file: 欄位 article_id,week,demand
        static_file: 欄位 article_id,<attr1>,...
        schema: 靜態屬性 schema
        min_demand_std: 可選的需求標準差過濾（預設關閉）
        future_steps: 動態特徵向 T 之後延伸的已知步數
        name: 數據集名稱（報表用）

    Returns:
        PanelDataset: 缺失的 (文章, 週) 以 mask=false、demand=0 表示
    """
    demand_df = pd.read_csv(demand_file, dtype={"article_id": str})
    required = ["article_id", "week", "demand"]
    missing_cols = [c for c in required if c not in demand_df.columns]
    if missing_cols:
        raise DataValidationError(f"demand file missing columns {missing_cols}")

    duplicated = demand_df.duplicated(["article_id", "week"], keep=False)
    if duplicated.any():
        rows = (np.flatnonzero(duplicated.to_numpy()) + 2).tolist()
        raise DataValidationError(
            f"duplicate (article_id, week) rows at file rows {rows[:20]}", rows=rows
        )

    values = pd.to_numeric(demand_df["demand"], errors="coerce")
    bad = ~np.isfinite(values.to_numpy(dtype=np.float64))
    if bad.any():
        rows = (np.flatnonzero(bad) + 2).tolist()
        raise DataValidationError(f"non-numeric demand at file rows {rows[:20]}")
    negative = values < 0
    if negative.any():
        rows = (np.flatnonzero(negative.to_numpy()) + 2).tolist()
        raise DataValidationError(f"negative demand at file rows {rows[:20]}", rows=rows)

    static_df = pd.read_csv(static_file, dtype={"article_id": str})
    if "article_id" not in static_df.columns:
        raise DataValidationError("static file missing article_id column")
    if static_df["article_id"].duplicated().any():
        dupes = sorted(static_df.loc[static_df["article_id"].duplicated(), "article_id"])
        raise DataValidationError(f"static file lists articles twice: {dupes[:20]}")

    article_ids = sorted(demand_df["article_id"].unique().tolist())
    absent = sorted(set(article_ids) - set(static_df["article_id"]))
    if absent:
        raise DataValidationError(
            f"articles missing from static file: {absent}", article_ids=absent
        )

    positions, timeline = _parse_weeks(demand_df["week"])
    n, t = len(article_ids), len(timeline)
    row_of = {article: i for i, article in enumerate(article_ids)}
    rows = demand_df["article_id"].map(row_of).to_numpy()
    cols = positions.to_numpy()

    demand = np.zeros((n, t), dtype=np.float64)
    mask = np.zeros((n, t), dtype=bool)
    demand[rows, cols] = values.to_numpy(dtype=np.float64)
    mask[rows, cols] = True

    if min_demand_std is not None:
        stds = np.array(
            [demand[i, mask[i]].std() if mask[i].any() else 0.0 for i in range(n)]
        )
        keep = stds > min_demand_std
        debug_log(
            f"需求標準差過濾 (>{min_demand_std}): 保留 {int(keep.sum())}/{n} 篇文章"
        )
        article_ids = [a for a, k in zip(article_ids, keep, strict=True) if k]
        demand, mask = demand[keep], mask[keep]
        n = len(article_ids)

    static_rows = static_df.set_index("article_id").loc[article_ids].reset_index()
    encoder = StaticFeatureEncoder(schema)
    static = encoder.fit_transform(static_rows)

    calendar = calendar_features(timeline, future_steps)
    dynamic = np.repeat(calendar[np.newaxis, :, :], n, axis=0)

    debug_log(f"讀取面板完成: N={n}, T={t}, M={static.shape[1]}, 觀測 {int(mask.sum())}")
    return PanelDataset(
        article_ids=article_ids,
        demand=demand,
        static_features=static,
        dynamic_features=dynamic,
        timeline=timeline,
        availability_mask=mask,
        future_steps=future_steps,
        schema_hash=encoder.schema_hash,
        name=name,
        feature_names=encoder.feature_names,
    )


def _truncate(data: PanelDataset, end: int, span_start: int) -> PanelDataset:
    """保留前 end 週；動態特徵保留相同的未來延伸步數"""
    extra = data.future_steps
    return replace(
        data,
        demand=data.demand[:, :end].copy(),
        availability_mask=data.availability_mask[:, :end].copy(),
        dynamic_features=data.dynamic_features[:, :, : end + extra].copy(),
        timeline=list(data.timeline[:end]),
        span_start=span_start,
    )


def split_time(
    data: PanelDataset, spec: SplitSpec
) -> tuple[PanelDataset, PanelDataset, PanelDataset]:
    """
    沿時間軸切分為 train / val / test

    test 為最後 test_weeks 週，val 為之前的 val_weeks 週，其餘為 train。
    val 與 test 保留之前的週作為唯讀歷史（span_start 標記擁有的起點）。
    """
    spec.validate_against(data.n_weeks)
    t = data.n_weeks
    test_start = t - spec.test_weeks
    val_start = test_start - spec.val_weeks

    train = _truncate(data, val_start, 0)
    val = _truncate(data, test_start, val_start)
    test = _truncate(data, t, test_start)
    debug_log(
        f"時間切分: train [0, {val_start}), val [{val_start}, {test_start}), "
        f"test [{test_start}, {t})"
    )
    return train, val, test


def reassemble_demand(splits: Sequence[PanelDataset]) -> np.ndarray:
    """按時間順序拼接各切分擁有的週，還原需求矩陣"""
    return np.concatenate([s.demand[:, s.span_start :] for s in splits], axis=1)


def flag_cold_starts(
    data: PanelDataset, at_week: int, min_history: int = 5
) -> np.ndarray:
    """
    標記冷啟動文章

    Args:
        at_week: 1 起算的週序號
        min_history: 最少歷史觀測數

    Returns:
        np.ndarray: 布林陣列；at_week 之前觀測週數 < min_history 者為 True
    """
    if not 1 <= at_week <= data.n_weeks:
        raise ConfigurationError(f"at_week {at_week} outside [1, {data.n_weeks}]")
    history = data.availability_mask[:, : at_week - 1].sum(axis=1)
    return history < min_history
