"""
合成面板生成器
==============

桌面規模驗證用的合成數據：每個集群有一個潛在 AR(1) 需求因子，
成員需求 = amplitude · softplus(level + 因子 + 季節項 + 文章偏移 + 高斯噪聲)。
靜態特徵為帶小擾動的集群 one-hot，集群內餘弦相似度 > 0.95、
集群間 < 0.5。同一 seed 產生完全相同的數據。
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from ..debug import data_debug_log as debug_log
from ..exceptions import ConfigurationError
from .panel import PanelDataset, calendar_features
from .schema import AttributeSpec, FeatureSchema, StaticFeatureEncoder


@dataclass(frozen=True)
class SyntheticSpec:
    """合成面板參數"""

    n_articles: int = 60
    n_clusters: int = 12
    T: int = 80
    noise_sd: float = 0.3
    seed: int = 7
    cold_start_fraction: float = 0.0
    ar_coefficient: float = 0.8
    factor_sd: float = 0.5
    offset_sd: float = 0.3
    level: float = 1.5
    amplitude: float = 10.0
    seasonal_amplitude: float = 0.3
    feature_jitter: float = 0.01
    future_steps: int = 0

    def __post_init__(self) -> None:
        if self.n_clusters < 1 or self.n_clusters > self.n_articles:
            raise ConfigurationError(
                f"need 1 ≤ n_clusters ≤ n_articles, got {self.n_clusters} / {self.n_articles}"
            )
        if self.T < 2:
            raise ConfigurationError(f"T must be ≥ 2, got {self.T}")
        if self.noise_sd < 0:
            raise ConfigurationError(f"noise_sd must be ≥ 0, got {self.noise_sd}")
        if not 0.0 <= self.cold_start_fraction < 1.0:
            raise ConfigurationError("cold_start_fraction must lie in [0, 1)")


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def generate_synthetic_panel(spec: SyntheticSpec) -> tuple[PanelDataset, np.ndarray]:
    """
    生成合成面板

    Returns:
        (PanelDataset, 每篇文章的集群標籤)
    """
    data, labels, _ = _simulate(spec)
    return data, labels


def _simulate(spec: SyntheticSpec) -> tuple[PanelDataset, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(spec.seed)
    n, c, t = spec.n_articles, spec.n_clusters, spec.T

    labels = np.arange(n) % c

    stationary_sd = spec.factor_sd / np.sqrt(max(1.0 - spec.ar_coefficient**2, 1e-6))
    factors = np.zeros((c, t))
    factors[:, 0] = rng.normal(0.0, stationary_sd, size=c)
    shocks = rng.normal(0.0, spec.factor_sd, size=(c, t))
    for week in range(1, t):
        factors[:, week] = spec.ar_coefficient * factors[:, week - 1] + shocks[:, week]

    offsets = rng.normal(0.0, spec.offset_sd, size=n)
    noise = rng.normal(0.0, 1.0, size=(n, t)) * spec.noise_sd
    seasonal = spec.seasonal_amplitude * np.sin(2.0 * np.pi * np.arange(t) / 52.0)

    latent = spec.level + factors[labels] + seasonal[np.newaxis, :] + offsets[:, None] + noise
    demand = spec.amplitude * _softplus(latent)

    mask = np.ones((n, t), dtype=bool)
    n_cold = int(round(spec.cold_start_fraction * n))
    if n_cold:
        cold = rng.choice(n, size=n_cold, replace=False)
        launch = rng.integers(int(0.75 * t), t, size=n_cold)
        for article, week in zip(cold, launch, strict=True):
            mask[article, :week] = False
    demand = np.where(mask, demand, 0.0)

    raw_static = np.eye(c)[labels] + spec.feature_jitter * rng.random((n, c))
    schema = FeatureSchema(
        attributes=tuple(AttributeSpec(f"attr_{k:02d}", "numeric") for k in range(c))
    )
    raw_frame = pd.DataFrame(raw_static, columns=schema.names)
    encoder = StaticFeatureEncoder(schema)
    static = encoder.fit_transform(raw_frame)

    timeline = list(range(1, t + 1))
    calendar = calendar_features(timeline, spec.future_steps)
    dynamic = np.repeat(calendar[np.newaxis, :, :], n, axis=0)

    data = PanelDataset(
        article_ids=[f"A{i:04d}" for i in range(n)],
        demand=demand,
        static_features=static,
        dynamic_features=dynamic,
        timeline=timeline,
        availability_mask=mask,
        future_steps=spec.future_steps,
        schema_hash=encoder.schema_hash,
        name="synthetic",
        feature_names=encoder.feature_names,
    )
    debug_log(
        f"合成面板: N={n}, 集群={c}, T={t}, noise_sd={spec.noise_sd}, "
        f"冷啟動 {n_cold} 篇, seed={spec.seed}"
    )
    return data, labels, raw_static


def write_synthetic_panel(
    spec: SyntheticSpec, out_dir: Path | str
) -> dict[str, Path]:
    """
    生成並寫出 CLI 可讀取的數據文件

    產出 demand.csv、static.csv、schema.yaml、clusters.csv。
    靜態文件寫入未編碼的原始屬性值，重新讀取後經 min-max 縮放。
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data, labels, raw_static = _simulate(spec)

    rows, cols = np.nonzero(data.availability_mask)
    demand_frame = pd.DataFrame(
        {
            "article_id": np.asarray(data.article_ids)[rows],
            "week": np.asarray(data.timeline)[cols],
            "demand": data.demand[rows, cols],
        }
    )
    static_frame = pd.DataFrame(
        raw_static, columns=[f"attr_{k:02d}" for k in range(spec.n_clusters)]
    )
    static_frame.insert(0, "article_id", data.article_ids)
    cluster_frame = pd.DataFrame({"article_id": data.article_ids, "cluster": labels})
    schema_doc = {
        "schema": [
            {"name": f"attr_{k:02d}", "kind": "numeric"} for k in range(spec.n_clusters)
        ]
    }

    paths = {
        "demand": out / "demand.csv",
        "static": out / "static.csv",
        "schema": out / "schema.yaml",
        "clusters": out / "clusters.csv",
    }
    demand_frame.to_csv(paths["demand"], index=False)
    static_frame.to_csv(paths["static"], index=False, float_format="%.10f")
    cluster_frame.to_csv(paths["clusters"], index=False)
    paths["schema"].write_text(yaml.safe_dump(schema_doc, sort_keys=False), encoding="utf-8")
    debug_log(f"合成數據已寫出: {out}")
    return paths

