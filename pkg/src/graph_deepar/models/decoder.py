"""
自回歸 Student-t 解碼器
======================

堆疊 LSTM 讀取每步輸入向量 (縮放後的需求滯後, GNN 嵌入, 靜態特徵 X_i,
動態特徵 Z)，線性頭輸出 (μ, s, ν)。

步驟對齊：預測第 w 週的步驟讀取 y^{w−1} 與 g^{w−1}，以及 Z^w。
錨點 t 的窗口共有 S = P + K − 1 步，預測 t−P+2 … t+K 週；
前 P−1 步為上下文步驟，後 K 步為預測步驟。t+1 之後的預測步驟沿用 g^t。
"""

from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..data.panel import PanelDataset
from ..debug import model_debug_log as debug_log
from ..exceptions import ConfigurationError, DataValidationError, ShapeMismatchError
from .likelihood import MIN_DOF, TStudentParams


MIN_SCALE = 1e-6

TargetScaling = Literal["mean", "none"]


@dataclass(frozen=True)
class DecoderConfig:
    """解碼器配置（預設值對應零售超參數）"""

    hidden_sizes: tuple[int, ...] = (128, 128)
    dropout: float = 0.2
    context_length: int = 10
    horizon: int = 4
    cell: str = "lstm"
    target_scaling: TargetScaling = "mean"
    fixed_dof: float | None = None

    def __post_init__(self) -> None:
        if self.cell != "lstm":
            raise ConfigurationError(f"unsupported recurrent cell {self.cell!r}")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ConfigurationError(f"invalid hidden sizes {self.hidden_sizes}")
        if self.context_length < 1 or self.horizon < 1:
            raise ConfigurationError(
                f"context_length and horizon must be ≥ 1, got "
                f"{self.context_length}, {self.horizon}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.target_scaling not in ("mean", "none"):
            raise ConfigurationError(f"unknown target scaling {self.target_scaling!r}")
        if self.fixed_dof is not None and self.fixed_dof <= MIN_DOF:
            raise ConfigurationError(f"fixed_dof must be > 2, got {self.fixed_dof}")

    @property
    def n_layers(self) -> int:
        return len(self.hidden_sizes)

    @property
    def n_steps(self) -> int:
        """每個窗口的解碼步數 S = P + K − 1"""
        return self.context_length + self.horizon - 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "hidden_sizes": list(self.hidden_sizes),
            "dropout": self.dropout,
            "context_length": self.context_length,
            "horizon": self.horizon,
            "cell": self.cell,
            "target_scaling": self.target_scaling,
            "fixed_dof": self.fixed_dof,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "DecoderConfig":
        return cls(**{**raw, "hidden_sizes": tuple(raw["hidden_sizes"])})


@dataclass(frozen=True)
class InputLayout:
    """輸入通道佈局：需求滯後 | 嵌入 | 靜態 | 動態"""

    embedding_dim: int
    static_dim: int
    dynamic_dim: int
    lag_dim: int = 1

    @property
    def width(self) -> int:
        return self.lag_dim + self.embedding_dim + self.static_dim + self.dynamic_dim

    def slices(self) -> dict[str, slice]:
        bounds: dict[str, slice] = {}
        start = 0
        for name, size in (
            ("lag", self.lag_dim),
            ("embedding", self.embedding_dim),
            ("static", self.static_dim),
            ("dynamic", self.dynamic_dim),
        ):
            bounds[name] = slice(start, start + size)
            start += size
        return bounds

    def to_dict(self) -> dict[str, int]:
        return {
            "embedding_dim": self.embedding_dim,
            "static_dim": self.static_dim,
            "dynamic_dim": self.dynamic_dim,
            "lag_dim": self.lag_dim,
        }


@dataclass(frozen=True, eq=False)
class DecoderInputs:
    """
    一批窗口的解碼器輸入（未縮放）

    lags: B×S 需求滯後（預測步驟中未知的部分為 0，取樣時回填）
    targets: B×S 目標需求；預測時為 None
    static: B×M；dynamic: B×S×L；scale: B
    """

    lags: torch.Tensor
    static: torch.Tensor
    dynamic: torch.Tensor
    scale: torch.Tensor
    targets: torch.Tensor | None = None

    @property
    def batch_size(self) -> int:
        return int(self.lags.shape[0])

    @property
    def n_steps(self) -> int:
        return int(self.lags.shape[1])

    def check_finite(self) -> None:
        channels = {
            "lags": self.lags,
            "static": self.static,
            "dynamic": self.dynamic,
            "scale": self.scale,
        }
        if self.targets is not None:
            channels["targets"] = self.targets
        for name, value in channels.items():
            if not bool(torch.isfinite(value).all()):
                raise DataValidationError(f"non-finite values in decoder channel {name!r}")


def build_decoder_inputs(
    data: PanelDataset,
    article_index: np.ndarray,
    anchors: np.ndarray,
    config: DecoderConfig,
    with_targets: bool = True,
    dtype: torch.dtype = torch.float32,
) -> DecoderInputs:
    """
    由面板組裝窗口的解碼器輸入

    with_targets=False 時只讀取 t 以前的需求，預測步驟的滯後留空。
    """
    P, K = config.context_length, config.horizon
    S = config.n_steps
    article_index = np.asarray(article_index, dtype=np.int64)
    anchors = np.asarray(anchors, dtype=np.int64)

    # 步驟 j 的滯後週為 t−P+1+j，目標週為 t−P+2+j
    lag_weeks = anchors[:, None] + np.arange(-P + 1, K)[None, :]
    target_weeks = lag_weeks + 1
    rows = article_index[:, None]

    context = data.demand[rows, anchors[:, None] + np.arange(-P + 1, 1)[None, :]]
    if config.target_scaling == "mean":
        scale = 1.0 + context.mean(axis=1)
    else:
        scale = np.ones(article_index.size)

    if with_targets:
        lags = data.demand[rows, lag_weeks]
        targets = torch.as_tensor(data.demand[rows, target_weeks], dtype=dtype)
    else:
        lags = np.zeros((article_index.size, S))
        lags[:, :P] = context
        targets = None

    dynamic = data.dynamic_features[rows, :, target_weeks]
    if dynamic.shape != (article_index.size, S, data.n_dynamic):
        raise ShapeMismatchError(
            "dynamic window", dynamic.shape, (article_index.size, S, data.n_dynamic)
        )
    return DecoderInputs(
        lags=torch.as_tensor(lags, dtype=dtype),
        static=torch.as_tensor(data.static_features[article_index], dtype=dtype),
        dynamic=torch.as_tensor(dynamic, dtype=dtype),
        scale=torch.as_tensor(scale, dtype=dtype),
        targets=targets,
    )


def step_embeddings(embeddings: torch.Tensor, n_steps: int) -> torch.Tensor:
    """
    把 B×P×D 嵌入展開為 B×S×D：步驟 j 使用第 min(j, P−1) 列
    """
    P = embeddings.shape[1]
    columns = torch.clamp(torch.arange(n_steps, device=embeddings.device), max=P - 1)
    return embeddings.index_select(1, columns)


RecurrentState = list[tuple[torch.Tensor, torch.Tensor]]


class DeepARDecoder(nn.Module):
    """堆疊 LSTM + Student-t 參數頭"""

    def __init__(self, config: DecoderConfig, layout: InputLayout):
        super().__init__()
        self.config = config
        self.layout = layout
        sizes = (layout.width, *config.hidden_sizes)
        self.rnn = nn.ModuleList(
            nn.LSTM(sizes[k], sizes[k + 1], batch_first=True)
            for k in range(config.n_layers)
        )
        self.dropout = nn.Dropout(config.dropout)
        self.head = nn.Linear(sizes[-1], 3)
        debug_log(
            f"DeepARDecoder: 輸入寬度 {layout.width}, LSTM {list(config.hidden_sizes)}"
        )

    def step_inputs(
        self,
        lags: torch.Tensor,
        scale: torch.Tensor,
        static: torch.Tensor,
        dynamic: torch.Tensor,
        embeddings: torch.Tensor | None,
    ) -> torch.Tensor:
        """組裝 B×S×W 輸入張量"""
        batch, steps = lags.shape
        parts = [(lags / scale.unsqueeze(1)).unsqueeze(-1)]
        if self.layout.embedding_dim:
            if embeddings is None:
                raise ShapeMismatchError(
                    "embeddings", None, (batch, steps, self.layout.embedding_dim)
                )
            parts.append(embeddings)
        parts.append(static.unsqueeze(1).expand(batch, steps, static.shape[-1]))
        parts.append(dynamic)
        x = torch.cat(parts, dim=-1)
        if x.shape[-1] != self.layout.width:
            raise ShapeMismatchError("decoder input width", x.shape[-1], self.layout.width)
        return x

    def forward(
        self, x: torch.Tensor, state: RecurrentState | None = None
    ) -> tuple[torch.Tensor, RecurrentState]:
        """
        Args:
            x: B×S×W
            state: 每層 (h, c)；None 表示零初始狀態

        Returns:
            (B×S×3 原始頭輸出, 新狀態)
        """
        new_state: RecurrentState = []
        h = x
        for k, lstm in enumerate(self.rnn):
            h, layer_state = lstm(h, None if state is None else state[k])
            new_state.append(layer_state)
            if k < len(self.rnn) - 1:
                h = self.dropout(h)
        return self.head(h), new_state

    def distribution(self, raw: torch.Tensor, scale: torch.Tensor) -> TStudentParams:
        """原始頭輸出 → 需求單位的 (μ, s, ν)"""
        s = scale.reshape(scale.shape + (1,) * (raw.dim() - 1 - scale.dim()))
        loc = raw[..., 0] * s
        sigma = (F.softplus(raw[..., 1]) + MIN_SCALE) * s
        if self.config.fixed_dof is not None:
            dof = torch.full_like(loc, self.config.fixed_dof)
        else:
            dof = MIN_DOF + F.softplus(raw[..., 2]) + MIN_SCALE
        return TStudentParams(loc=loc, scale=sigma, dof=dof)


def decoder_forward(
    decoder: DeepARDecoder,
    inputs: DecoderInputs,
    embeddings: torch.Tensor | None = None,
    training: bool = False,
) -> TStudentParams:
    """
    以教師強制跑完整個窗口，返回每步的分佈參數

    Args:
        embeddings: B×P×D 嵌入序列；非圖模式為 None
    """
    inputs.check_finite()
    step_emb = None
    if embeddings is not None:
        if not bool(torch.isfinite(embeddings).all()):
            raise DataValidationError("non-finite values in decoder channel 'embedding'")
        step_emb = step_embeddings(embeddings, inputs.n_steps)
    x = decoder.step_inputs(
        inputs.lags, inputs.scale, inputs.static, inputs.dynamic, step_emb
    )

    was_training = decoder.training
    decoder.train(training)
    try:
        raw, _ = decoder(x)
    finally:
        decoder.train(was_training)
    return decoder.distribution(raw, inputs.scale)
