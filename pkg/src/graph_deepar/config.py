"""
運行配置
========

RunConfig 以 pydantic 模型描述一次完整運行：每個模組一個區段，
YAML 文件中的鍵為各區段的扁平欄位。

優先順序：CLI 旗標（--seed、--out-dir、--set 區段.鍵=值）> 文件 > preset > 預設值。

環境變數：
- GRAPH_DEEPAR_CONFIG: 未指定 --config 時使用的配置文件路徑（可選）
"""

import os
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .data.panel import SplitSpec
from .data.schema import FeatureSchema
from .data.synthetic import SyntheticSpec
from .debug import debug_log
from .exceptions import ConfigurationError
from .models.decoder import DecoderConfig
from .models.encoder import EncoderConfig
from .training.trainer import GraphOptions, TrainConfig
from .utils.artifact_store import stable_hash


CONFIG_ENV_VAR = "GRAPH_DEEPAR_CONFIG"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataSection(_Section):
    demand_file: str | None = None
    static_file: str | None = None
    schema_file: str | None = None
    name: str = "panel"
    min_demand_std: float | None = None
    future_steps: int = Field(default=0, ge=0)


class SplitSection(_Section):
    test_weeks: int = Field(default=26, ge=1)
    val_weeks: int = Field(default=13, ge=1)


class GraphSection(_Section):
    threshold: float = Field(default=0.95, ge=-1.0, le=1.0)
    max_neighbors: int = Field(default=10, ge=0)
    node_lag_depth: int = Field(default=1, ge=1)
    chunk_size: int | None = Field(default=None, ge=1)
    max_workers: int = Field(default=1, ge=1)


class EncoderSection(_Section):
    hidden_sizes: list[int] = Field(default_factory=lambda: [16, 8])
    dropout: float = Field(default=0.2, ge=0.0, lt=1.0)
    negative_slope: float = 0.01
    bias: bool = False


class DecoderSection(_Section):
    hidden_sizes: list[int] = Field(default_factory=lambda: [128, 128])
    dropout: float = Field(default=0.2, ge=0.0, lt=1.0)
    context_length: int = Field(default=10, ge=1)
    horizon: int = Field(default=4, ge=1)
    cell: Literal["lstm"] = "lstm"
    target_scaling: Literal["mean", "none"] = "mean"
    fixed_dof: float | None = None


class TrainSection(_Section):
    max_epochs: int = Field(default=50, ge=1)
    early_stopping_patience: int = Field(default=5, ge=1)
    learning_rate: float = Field(default=5e-3, gt=0.0)
    batch_size: int = Field(default=32, ge=1)
    optimizer: str = "adam"
    optimizer_settings: dict[str, Any] = Field(default_factory=dict)
    grad_clip: float | None = 10.0
    w_under: float = Field(default=1.0, gt=0.0)
    w_over: float = Field(default=1.0, gt=0.0)
    num_workers: int = Field(default=0, ge=0, le=1)
    dtype: Literal["float32", "float64"] = "float32"


class ForecastSection(_Section):
    n_samples: int = Field(default=200, ge=1)
    quantiles: list[float] = Field(default_factory=lambda: [0.1, 0.5, 0.9])
    point: Literal["mean", "median"] = "mean"
    export_samples: bool = False


class EvaluationSection(_Section):
    top_n: int = Field(default=100, ge=1)
    min_history: int = Field(default=5, ge=0)
    cost_under: float | None = Field(default=None, gt=0.0)
    cost_over: float | None = Field(default=None, gt=0.0)
    baseline: str | None = None


class SyntheticSection(_Section):
    n_articles: int = 60
    n_clusters: int = 12
    T: int = 80
    noise_sd: float = 0.3
    seed: int = 7
    cold_start_fraction: float = 0.0


PRESETS: dict[str, dict[str, Any]] = {
    "retail": {},
    "ecommerce": {
        "graph": {"max_neighbors": 5},
        "train": {"learning_rate": 1e-2},
        "data": {"min_demand_std": 1.0},
    },
}


class RunConfig(_Section):
    """一次運行的完整配置"""

    seed: int = 0
    out_dir: str = "runs/default"
    preset: str | None = None
    data: DataSection = Field(default_factory=DataSection)
    split: SplitSection = Field(default_factory=SplitSection)
    graph: GraphSection = Field(default_factory=GraphSection)
    encoder: EncoderSection = Field(default_factory=EncoderSection)
    decoder: DecoderSection = Field(default_factory=DecoderSection)
    train: TrainSection = Field(default_factory=TrainSection)
    forecast: ForecastSection = Field(default_factory=ForecastSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    synthetic: SyntheticSection = Field(default_factory=SyntheticSection)

    def config_hash(self) -> str:
        """決定評估集合的區段雜湊（data、split、P、K）"""
        return stable_hash(
            {
                "data": self.data.model_dump(),
                "split": self.split.model_dump(),
                "context_length": self.decoder.context_length,
                "horizon": self.decoder.horizon,
            }
        )

    @classmethod
    def from_env(
        cls,
        overrides: list[str] | tuple[str, ...] = (),
        seed: int | None = None,
        out_dir: str | None = None,
    ) -> "RunConfig":
        """以 GRAPH_DEEPAR_CONFIG 指向的文件（若有）載入配置"""
        path = os.getenv(CONFIG_ENV_VAR) or None
        return load_config(path, overrides, seed=seed, out_dir=out_dir)

    def full_hash(self) -> str:
        return stable_hash(self.model_dump())

    def split_spec(self) -> SplitSpec:
        return SplitSpec(test_weeks=self.split.test_weeks, val_weeks=self.split.val_weeks)

    def feature_schema(self) -> FeatureSchema:
        """讀取 data.schema_file（頂層 `schema` 鍵或直接為列表/映射）"""
        if not self.data.schema_file:
            raise ConfigurationError("data.schema_file is not set")
        path = Path(self.data.schema_file)
        if not path.exists():
            raise ConfigurationError(f"schema file not found: {path}")
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        if isinstance(raw, dict) and "schema" in raw:
            raw = raw["schema"]
        return FeatureSchema.from_config(raw)

    def graph_options(self) -> GraphOptions:
        return GraphOptions(
            threshold=self.graph.threshold,
            max_neighbors=self.graph.max_neighbors,
            node_lag_depth=self.graph.node_lag_depth,
        )

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            input_dim=self.graph.node_lag_depth + 1,
            hidden_sizes=tuple(self.encoder.hidden_sizes),
            dropout=self.encoder.dropout,
            negative_slope=self.encoder.negative_slope,
            bias=self.encoder.bias,
        )

    def decoder_config(self) -> DecoderConfig:
        d = self.decoder
        return DecoderConfig(
            hidden_sizes=tuple(d.hidden_sizes),
            dropout=d.dropout,
            context_length=d.context_length,
            horizon=d.horizon,
            cell=d.cell,
            target_scaling=d.target_scaling,
            fixed_dof=d.fixed_dof,
        )

    def train_config(self, graph_mode: bool) -> TrainConfig:
        t = self.train
        return TrainConfig(
            max_epochs=t.max_epochs,
            early_stopping_patience=t.early_stopping_patience,
            learning_rate=t.learning_rate,
            batch_size=t.batch_size,
            optimizer=t.optimizer,
            optimizer_settings=dict(t.optimizer_settings),
            seed=self.seed,
            graph=self.graph_options() if graph_mode else None,
            grad_clip=t.grad_clip,
            w_under=t.w_under,
            w_over=t.w_over,
            num_workers=t.num_workers,
            dtype=t.dtype,
        )

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(**self.synthetic.model_dump())

    def costs(self) -> tuple[float, float] | None:
        e = self.evaluation
        if e.cost_under is None and e.cost_over is None:
            return None
        if e.cost_under is None or e.cost_over is None:
            raise ConfigurationError("set both evaluation.cost_under and cost_over")
        return e.cost_under, e.cost_over


def _deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_override(text: str) -> dict[str, Any]:
    """
    解析 `區段.鍵=值` 覆蓋；值以 YAML 解析（數字、布林、列表、null）

    Examples:
        "graph.threshold=0.9" → {"graph": {"threshold": 0.9}}
        "seed=3" → {"seed": 3}
    """
    if "=" not in text:
        raise ConfigurationError(f"override must look like section.key=value: {text!r}")
    dotted, raw_value = text.split("=", 1)
    keys = [k for k in dotted.strip().split(".") if k]
    if not keys:
        raise ConfigurationError(f"override has an empty key: {text!r}")
    try:
        value = yaml.safe_load(raw_value) if raw_value.strip() else None
    except yaml.YAMLError as e:
        raise ConfigurationError(f"cannot parse override value {raw_value!r}: {e}") from e
    nested: dict[str, Any] = {keys[-1]: value}
    for key in reversed(keys[:-1]):
        nested = {key: nested}
    return nested


def read_config_file(path: Path | str) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigurationError(f"config file {path} is not valid YAML: {e}") from e
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config file {path} must contain a mapping")
    return raw


def load_config(
    path: Path | str | None = None,
    overrides: list[str] | tuple[str, ...] = (),
    seed: int | None = None,
    out_dir: str | None = None,
) -> RunConfig:
    """
    組合預設值、preset、配置文件與 CLI 覆蓋

    Args:
        path: YAML 配置文件；None 時不讀文件
        overrides: `區段.鍵=值` 列表（--set）
        seed / out_dir: 對應 CLI 旗標，優先於其他來源

    Raises:
        ConfigurationError: 文件缺失、YAML 錯誤、未知鍵或值驗證失敗
    """
    file_values = read_config_file(path) if path is not None else {}
    flag_values: dict[str, Any] = {}
    for text in overrides:
        flag_values = _deep_merge(flag_values, parse_override(text))
    if seed is not None:
        flag_values["seed"] = seed
    if out_dir is not None:
        flag_values["out_dir"] = out_dir

    preset = flag_values.get("preset", file_values.get("preset"))
    if preset is not None and preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {preset!r}; available: {sorted(PRESETS)}")
    merged = _deep_merge(PRESETS.get(preset, {}) if preset else {}, file_values)
    merged = _deep_merge(merged, flag_values)

    try:
        config = RunConfig.model_validate(merged)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigurationError(f"invalid configuration: {problems}") from e
    debug_log(
        f"配置載入: file={path}, preset={preset}, 覆蓋 {len(overrides)} 項, "
        f"config_hash={config.config_hash()}",
        "CONFIG",
    )
    return config


