"""
數據模組
========

面板讀取與驗證、靜態特徵編碼、時間切分、滑動窗口與合成數據。
"""

from .panel import (
    N_CALENDAR_FEATURES,
    PanelDataset,
    SplitSpec,
    calendar_features,
    flag_cold_starts,
    load_panel,
    reassemble_demand,
    split_time,
)
from .schema import (
    AttributeSpec,
    FeatureSchema,
    StaticFeatureEncoder,
    encode_static_features,
)
from .synthetic import SyntheticSpec, generate_synthetic_panel, write_synthetic_panel
from .windows import WindowSet, make_windows, rolling_origins


__all__ = [
    "N_CALENDAR_FEATURES",
    "AttributeSpec",
    "FeatureSchema",
    "PanelDataset",
    "SplitSpec",
    "StaticFeatureEncoder",
    "SyntheticSpec",
    "WindowSet",
    "calendar_features",
    "encode_static_features",
    "flag_cold_starts",
    "generate_synthetic_panel",
    "load_panel",
    "make_windows",
    "reassemble_demand",
    "rolling_origins",
    "split_time",
    "write_synthetic_panel",
]
