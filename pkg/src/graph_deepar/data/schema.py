"""
靜態特徵 schema 與編碼
======================

類別屬性 one-hot 編碼、數值屬性 min-max 縮放到 [0, 1]。
欄位順序固定：schema 順序，其次詞彙順序。編碼結果 X_i 同時供解碼器
與圖相似度計算使用。
"""

from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
import pandas as pd
from sklearn.preprocessing import MinMaxScaler, OneHotEncoder

from ..debug import data_debug_log as debug_log
from ..debug import warn_data_quality
from ..exceptions import ConfigurationError, DataValidationError
from ..utils.artifact_store import stable_hash


AttributeKind = Literal["categorical", "numeric"]


@dataclass(frozen=True)
class AttributeSpec:
    """單一屬性描述"""

    name: str
    kind: AttributeKind
    vocabulary: tuple[str, ...] | None = None


@dataclass(frozen=True)
class FeatureSchema:
    """有序屬性清單"""

    attributes: tuple[AttributeSpec, ...]

    def __post_init__(self) -> None:
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate attribute names in schema: {names}")
        for attribute in self.attributes:
            if attribute.kind not in ("categorical", "numeric"):
                raise ConfigurationError(
                    f"attribute {attribute.name!r} has unknown kind {attribute.kind!r}"
                )

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    @classmethod
    def from_config(cls, raw: Any) -> "FeatureSchema":
        """
        從配置建立 schema

        支援兩種寫法：
        - 列表：[{name: color, kind: categorical, vocabulary: [red, blue]}, ...]
        - 映射：{color: categorical, price: numeric}
        """
        if isinstance(raw, FeatureSchema):
            return raw
        specs: list[AttributeSpec] = []
        if isinstance(raw, dict):
            for name, kind in raw.items():
                specs.append(AttributeSpec(name=str(name), kind=kind))
        elif isinstance(raw, list):
            for item in raw:
                vocabulary = item.get("vocabulary")
                specs.append(
                    AttributeSpec(
                        name=str(item["name"]),
                        kind=item["kind"],
                        vocabulary=tuple(str(v) for v in vocabulary)
                        if vocabulary is not None
                        else None,
                    )
                )
        else:
            raise ConfigurationError(f"unsupported schema description: {type(raw)}")
        if not specs:
            raise ConfigurationError("feature schema declares no attributes")
        return cls(attributes=tuple(specs))

    def to_config(self) -> list[dict[str, Any]]:
        out = []
        for a in self.attributes:
            item: dict[str, Any] = {"name": a.name, "kind": a.kind}
            if a.vocabulary is not None:
                item["vocabulary"] = list(a.vocabulary)
            out.append(item)
        return out


@dataclass
class EncodingSummary:
    """編碼統計（未知類別計數）"""

    unseen_counts: dict[str, int] = field(default_factory=dict)

    @property
    def total_unseen(self) -> int:
        return sum(self.unseen_counts.values())


class StaticFeatureEncoder:
    """按 schema 擬合與轉換靜態屬性"""

    def __init__(self, schema: FeatureSchema):
        self.schema = schema
        self._encoders: dict[str, OneHotEncoder | MinMaxScaler] = {}
        self.vocabularies: dict[str, list[str]] = {}
        self.ranges: dict[str, tuple[float, float]] = {}
        self.last_summary = EncodingSummary()
        self.fitted = False

    def fit(self, raw_attributes: pd.DataFrame) -> "StaticFeatureEncoder":
        """以訓練文章屬性擬合詞彙與數值範圍"""
        self._check_columns(raw_attributes)
        for attribute in self.schema.attributes:
            column = raw_attributes[attribute.name]
            if attribute.kind == "categorical":
                if attribute.vocabulary is not None:
                    vocabulary = list(attribute.vocabulary)
                else:
                    vocabulary = sorted(column.astype(str).unique().tolist())
                encoder = OneHotEncoder(
                    categories=[vocabulary],
                    handle_unknown="ignore",
                    sparse_output=False,
                    dtype=np.float64,
                )
                encoder.fit(np.asarray(vocabulary, dtype=object).reshape(-1, 1))
                self._encoders[attribute.name] = encoder
                self.vocabularies[attribute.name] = vocabulary
            else:
                values = self._numeric(column, attribute.name)
                scaler = MinMaxScaler(feature_range=(0.0, 1.0), clip=True)
                scaler.fit(values.reshape(-1, 1))
                self._encoders[attribute.name] = scaler
                self.ranges[attribute.name] = (
                    float(scaler.data_min_[0]),
                    float(scaler.data_max_[0]),
                )
        self.fitted = True
        debug_log(
            f"靜態特徵編碼器擬合完成: {len(self.schema.attributes)} 個屬性, "
            f"{self.n_features} 個欄位"
        )
        return self

    def transform(self, raw_attributes: pd.DataFrame) -> np.ndarray:
        """轉換為 X 矩陣；未知類別映射為全零區塊並彙總警告"""
        if not self.fitted:
            raise ConfigurationError("StaticFeatureEncoder.transform called before fit")
        self._check_columns(raw_attributes)
        blocks: list[np.ndarray] = []
        summary = EncodingSummary()
        for attribute in self.schema.attributes:
            column = raw_attributes[attribute.name]
            encoder = self._encoders[attribute.name]
            if attribute.kind == "categorical":
                values = column.astype(str).to_numpy(dtype=object)
                unseen = int((~np.isin(values, self.vocabularies[attribute.name])).sum())
                if unseen:
                    summary.unseen_counts[attribute.name] = unseen
                blocks.append(encoder.transform(values.reshape(-1, 1)))
            else:
                values = self._numeric(column, attribute.name)
                blocks.append(encoder.transform(values.reshape(-1, 1)))

        self.last_summary = summary
        if summary.total_unseen:
            warn_data_quality(
                f"{summary.total_unseen} unseen categorical values mapped to zeros: "
                f"{summary.unseen_counts}"
            )
        if not blocks:
            return np.zeros((len(raw_attributes), 0))
        return np.hstack(blocks).astype(np.float64)

    def fit_transform(self, raw_attributes: pd.DataFrame) -> np.ndarray:
        return self.fit(raw_attributes).transform(raw_attributes)

    @property
    def n_features(self) -> int:
        total = 0
        for attribute in self.schema.attributes:
            if attribute.kind == "categorical":
                total += len(self.vocabularies.get(attribute.name, []))
            else:
                total += 1
        return total

    @property
    def feature_names(self) -> list[str]:
        names: list[str] = []
        for attribute in self.schema.attributes:
            if attribute.kind == "categorical":
                names.extend(
                    f"{attribute.name}={value}"
                    for value in self.vocabularies[attribute.name]
                )
            else:
                names.append(attribute.name)
        return names

    def state(self) -> dict[str, Any]:
        """擬合狀態（用於雜湊與檢查點）"""
        return {
            "attributes": self.schema.to_config(),
            "vocabularies": self.vocabularies,
            "ranges": {k: list(v) for k, v in self.ranges.items()},
        }

    @property
    def schema_hash(self) -> str:
        return stable_hash(self.state())

    def _check_columns(self, raw_attributes: pd.DataFrame) -> None:
        missing = [n for n in self.schema.names if n not in raw_attributes.columns]
        if missing:
            raise DataValidationError(f"static attributes missing columns: {missing}")

    @staticmethod
    def _numeric(column: pd.Series, name: str) -> np.ndarray:
        values = pd.to_numeric(column, errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isfinite(values)
        if bad.any():
            rows = column.index[bad].tolist()[:10]
            raise DataValidationError(
                f"numeric attribute {name!r} has non-finite values at rows {rows}"
            )
        return values


def encode_static_features(
    raw_attributes: pd.DataFrame,
    schema: FeatureSchema,
    encoder: StaticFeatureEncoder | None = None,
) -> np.ndarray:
    """
    編碼文章靜態屬性

    Args:
        raw_attributes: 每篇文章一行，欄位為 schema 屬性
        schema: 屬性 schema
        encoder: 已擬合（凍結）的編碼器；None 時以 raw_attributes 擬合

    Returns:
        np.ndarray: N×M 靜態特徵矩陣
    """
    if encoder is None:
        encoder = StaticFeatureEncoder(schema).fit(raw_attributes)
    return encoder.transform(raw_attributes)
