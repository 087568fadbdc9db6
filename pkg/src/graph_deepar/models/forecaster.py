"""
GraphDeepAR 模型與取樣預測
==========================

GraphDeepAR 由可選的 GraphEncoder 與 DeepARDecoder 組成；不帶編碼器時
即為 DeepAR 基線（嵌入維度 0，沒有任何圖參數）。

取樣時每條路徑逐步前推：從 StudentT(ν, μ, s) 抽樣、截斷到 0，
再作為下一步的需求滯後。每個 (文章, 錨點) 使用獨立的隨機流，
路徑 p 對應其中第 p 行，因此結果與批次劃分無關。
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
import torch
from torch import nn

from ..data.panel import PanelDataset
from ..data.windows import WindowSet
from ..debug import model_debug_log as debug_log
from ..exceptions import ConfigurationError, DataValidationError
from ..graph.node_features import DemandAccessAudit, window_node_features
from ..graph.similarity import SimilarityGraph
from .decoder import (
    DecoderConfig,
    DecoderInputs,
    DeepARDecoder,
    InputLayout,
    build_decoder_inputs,
    decoder_forward,
    step_embeddings,
)
from .encoder import EncoderConfig, GraphEncoder, MessageIndex
from .likelihood import TStudentParams, sample_student_t


DEFAULT_QUANTILES = (0.1, 0.5, 0.9)


class GraphDeepAR(nn.Module):
    """圖編碼器 + 自回歸解碼器"""

    def __init__(
        self,
        decoder_config: DecoderConfig,
        static_dim: int,
        dynamic_dim: int,
        encoder_config: EncoderConfig | None = None,
        node_lag_depth: int = 1,
    ):
        super().__init__()
        self.decoder_config = decoder_config
        self.encoder_config = encoder_config
        self.node_lag_depth = node_lag_depth
        if encoder_config is not None and encoder_config.input_dim != node_lag_depth + 1:
            raise ConfigurationError(
                f"encoder input_dim {encoder_config.input_dim} must equal "
                f"node_lag_depth + 1 = {node_lag_depth + 1}"
            )
        self.encoder = GraphEncoder(encoder_config) if encoder_config else None
        self.layout = InputLayout(
            embedding_dim=encoder_config.output_dim if encoder_config else 0,
            static_dim=static_dim,
            dynamic_dim=dynamic_dim,
        )
        self.decoder = DeepARDecoder(decoder_config, self.layout)

    @property
    def graph_mode(self) -> bool:
        return self.encoder is not None

    @property
    def dtype(self) -> torch.dtype:
        return next(self.parameters()).dtype

    def parameter_inventory(self) -> dict[str, tuple[int, ...]]:
        return {name: tuple(p.shape) for name, p in self.named_parameters()}

    def node_embeddings(
        self,
        data: PanelDataset,
        graph: SimilarityGraph,
        anchor: int,
        index: MessageIndex | None = None,
        audit: DemandAccessAudit | None = None,
    ) -> torch.Tensor:
        """錨點 anchor 時全部 N 個節點的嵌入 N×P×D（沿用當前 train/eval 模式）"""
        if self.encoder is None:
            raise ConfigurationError("node embeddings requested from a baseline model")
        features = window_node_features(
            graph,
            data,
            anchor,
            self.decoder_config.context_length,
            self.node_lag_depth,
            audit=audit,
        )
        values = torch.as_tensor(features.values, dtype=self.dtype)
        if index is None:
            index = MessageIndex.from_graph(graph, dtype=self.dtype)
        return self.encoder(values, index)

    def forward(
        self, inputs: DecoderInputs, embeddings: torch.Tensor | None = None
    ) -> TStudentParams:
        """教師強制前向；embeddings 為該批文章的 B×P×D"""
        return decoder_forward(self.decoder, inputs, embeddings, training=self.training)


@dataclass(frozen=True, eq=False)
class ForecastPaths:
    """取樣路徑：paths 形狀為 W×n_samples×K，第 w 列對應 (文章, 錨點)"""

    article_index: np.ndarray
    anchors: np.ndarray
    paths: np.ndarray

    @property
    def horizon(self) -> int:
        return int(self.paths.shape[2])

    @property
    def n_samples(self) -> int:
        return int(self.paths.shape[1])


def _path_uniforms(
    seed: int, article: int, anchor: int, n_samples: int, horizon: int
) -> np.ndarray:
    sequence = np.random.SeedSequence(seed, spawn_key=(int(article), int(anchor)))
    return np.random.default_rng(sequence).random((n_samples, horizon))


def _expand_state(
    state: list[tuple[torch.Tensor, torch.Tensor]] | None, repeats: int
) -> list[tuple[torch.Tensor, torch.Tensor]] | None:
    if state is None:
        return None
    return [
        (h.repeat_interleave(repeats, dim=1), c.repeat_interleave(repeats, dim=1))
        for h, c in state
    ]


def _sample_group(
    model: GraphDeepAR,
    data: PanelDataset,
    article_index: np.ndarray,
    anchor: int,
    n_samples: int,
    seed: int,
    graph: SimilarityGraph | None,
    index: MessageIndex | None,
) -> np.ndarray:
    config = model.decoder_config
    P, K = config.context_length, config.horizon
    B = article_index.size
    anchors = np.full(B, anchor, dtype=np.int64)
    inputs = build_decoder_inputs(
        data, article_index, anchors, config, with_targets=False, dtype=model.dtype
    )
    inputs.check_finite()

    step_emb = None
    if model.graph_mode:
        assert graph is not None
        all_nodes = model.node_embeddings(data, graph, anchor, index=index)
        step_emb = step_embeddings(
            all_nodes[torch.as_tensor(article_index)], config.n_steps
        )

    decoder = model.decoder
    state = None
    if P > 1:
        x_context = decoder.step_inputs(
            inputs.lags[:, : P - 1],
            inputs.scale,
            inputs.static,
            inputs.dynamic[:, : P - 1],
            None if step_emb is None else step_emb[:, : P - 1],
        )
        _, state = decoder(x_context)

    state = _expand_state(state, n_samples)
    scale = inputs.scale.repeat_interleave(n_samples)
    static = inputs.static.repeat_interleave(n_samples, dim=0)
    dynamic = inputs.dynamic.repeat_interleave(n_samples, dim=0)
    emb = None if step_emb is None else step_emb.repeat_interleave(n_samples, dim=0)
    lag = inputs.lags[:, P - 1].repeat_interleave(n_samples)

    uniforms = np.concatenate(
        [_path_uniforms(seed, a, anchor, n_samples, K) for a in article_index]
    )
    draws = np.zeros((B * n_samples, K))
    for h in range(K):
        j = P - 1 + h
        x = decoder.step_inputs(
            lag.unsqueeze(1),
            scale,
            static,
            dynamic[:, j : j + 1],
            None if emb is None else emb[:, j : j + 1],
        )
        raw, state = decoder(x, state)
        params = decoder.distribution(raw[:, 0], scale)
        loc, sigma, dof = params.detach_numpy()
        draws[:, h] = sample_student_t(loc, sigma, dof, uniforms[:, h])
        lag = torch.as_tensor(draws[:, h], dtype=model.dtype)
    return draws.reshape(B, n_samples, K)


def sample_forecast(
    model: GraphDeepAR,
    data: PanelDataset,
    windows: WindowSet,
    n_samples: int,
    seed: int,
    graph: SimilarityGraph | None = None,
) -> ForecastPaths:
    """
    從每個窗口的錨點向後取樣 K 步需求路徑

    圖模式使用完整（未採樣）圖計算上下文嵌入，預測步驟沿用最後一列。

    Args:
        windows: 預測起點（只需上下文完整可用）
        n_samples: 每個窗口的路徑數
        seed: 隨機種子；相同 seed 產生逐位相同的路徑
    """
    if n_samples < 1:
        raise DataValidationError(f"n_samples must be ≥ 1, got {n_samples}")
    if windows.horizon != model.decoder_config.horizon:
        raise ConfigurationError(
            f"window horizon {windows.horizon} differs from model horizon "
            f"{model.decoder_config.horizon}"
        )
    if model.graph_mode and graph is None:
        raise ConfigurationError("graph-mode model needs a graph for sampling")

    index = None
    if graph is not None and model.graph_mode:
        graph = graph.without_sampling()
        index = MessageIndex.from_graph(graph, dtype=model.dtype)

    K = model.decoder_config.horizon
    paths = np.zeros((len(windows), n_samples, K))
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            for anchor in windows.anchors():
                positions = np.flatnonzero(windows.anchor == anchor)
                paths[positions] = _sample_group(
                    model,
                    data,
                    windows.article_index[positions],
                    int(anchor),
                    n_samples,
                    seed,
                    graph,
                    index,
                )
    finally:
        model.train(was_training)

    debug_log(f"取樣完成: {len(windows)} 個窗口 × {n_samples} 條路徑 × {K} 步")
    return ForecastPaths(
        article_index=windows.article_index.copy(),
        anchors=windows.anchor.copy(),
        paths=paths,
    )


def forecast_quantiles(paths: np.ndarray, qs: Sequence[float]) -> np.ndarray:
    """
    逐步經驗分位數

    Args:
        paths: n_samples×K（或 W×n_samples×K）
        qs: (0, 1) 內的分位水準

    Returns:
        np.ndarray: K×|qs|（或 W×K×|qs|）
    """
    paths = np.asarray(paths, dtype=np.float64)
    if paths.ndim < 2 or paths.shape[-2] < 1:
        raise DataValidationError("forecast_quantiles needs at least one sample path")
    levels = np.asarray(qs, dtype=np.float64)
    if levels.size == 0 or np.any(levels <= 0) or np.any(levels >= 1):
        raise DataValidationError(f"quantile levels must lie in (0, 1), got {list(qs)}")
    values = np.quantile(paths, levels, axis=-2)
    return np.moveaxis(values, 0, -1)


def point_forecast(paths: np.ndarray, kind: str = "mean") -> np.ndarray:
    """路徑的點預測：mean 或 median，沿樣本軸"""
    if kind == "mean":
        return np.asarray(paths).mean(axis=-2)
    if kind == "median":
        return np.median(paths, axis=-2)
    raise ConfigurationError(f"unknown point forecast {kind!r}")


def quantile_column(q: float) -> str:
    return f"q{q:g}"


def forecast_frame(
    data: PanelDataset,
    forecast: ForecastPaths,
    qs: Sequence[float] = DEFAULT_QUANTILES,
) -> pd.DataFrame:
    """轉為 `article_id,week,q…,mean` 表格，按 (錨點, 文章, 週) 排列"""
    K = forecast.horizon
    quantiles = forecast_quantiles(forecast.paths, qs)
    means = point_forecast(forecast.paths, "mean")
    records: dict[str, list] = {"article_id": [], "week": []}
    for q in qs:
        records[quantile_column(q)] = []
    records["mean"] = []
    for w, (article, anchor) in enumerate(
        zip(forecast.article_index, forecast.anchors, strict=True)
    ):
        for h in range(K):
            records["article_id"].append(data.article_ids[int(article)])
            records["week"].append(data.week_label(int(anchor) + 1 + h))
            for k, q in enumerate(qs):
                records[quantile_column(q)].append(float(quantiles[w, h, k]))
            records["mean"].append(float(means[w, h]))
    return pd.DataFrame(records)


def keep_latest_origin(frame: pd.DataFrame) -> pd.DataFrame:
    """
    每個 (文章, 週) 只保留最晚起點的預測

    frame 需按錨點排列（forecast_frame 的輸出順序）；重疊的起點只在最後一個
    滾動起點補齊評估週時出現。
    """
    kept = frame.drop_duplicates(["article_id", "week"], keep="last")
    if len(kept) < len(frame):
        debug_log(f"重疊起點: 丟棄 {len(frame) - len(kept)} 行較早的預測")
    return kept.reset_index(drop=True)


def sample_frame(data: PanelDataset, forecast: ForecastPaths) -> pd.DataFrame:
    """原始樣本導出：`article_id,week,sample,demand`"""
    W, n, K = forecast.paths.shape
    article = np.repeat(forecast.article_index, n * K)
    week = (forecast.anchors[:, None, None] + 1 + np.arange(K)[None, None, :]).repeat(
        n, axis=1
    )
    return pd.DataFrame(
        {
            "article_id": np.asarray(data.article_ids)[article],
            "week": [data.week_label(int(x)) for x in week.reshape(-1)],
            "sample": np.tile(np.repeat(np.arange(n), K), W),
            "demand": forecast.paths.reshape(-1),
        }
    )
