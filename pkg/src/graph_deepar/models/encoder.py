"""
GNN 編碼器
==========

均值聚合圖卷積：對節點 i，輸出為 LeakyReLU( mean_{j ∈ ℐ(i) ∪ {i}} h_j W )。
自環在聚合時加入，孤立節點只轉換自身特徵。同一組權重套用到窗口的
每個時間步，因此參數量與 P、N 無關。
"""

from dataclasses import dataclass
from typing import Any

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..debug import model_debug_log as debug_log
from ..exceptions import ConfigurationError, ShapeMismatchError
from ..graph.node_features import NodeFeatureWindow
from ..graph.similarity import SimilarityGraph


@dataclass(frozen=True)
class EncoderConfig:
    """編碼器配置；input_dim = node_lag_depth + 1"""

    input_dim: int
    hidden_sizes: tuple[int, ...] = (16, 8)
    dropout: float = 0.2
    negative_slope: float = 0.01
    bias: bool = False

    def __post_init__(self) -> None:
        if self.input_dim < 1 or not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ConfigurationError(
                f"invalid encoder shape: input {self.input_dim}, layers {self.hidden_sizes}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must lie in [0, 1), got {self.dropout}")

    @property
    def output_dim(self) -> int:
        return self.hidden_sizes[-1]

    def to_dict(self) -> dict[str, Any]:
        return {
            "input_dim": self.input_dim,
            "hidden_sizes": list(self.hidden_sizes),
            "dropout": self.dropout,
            "negative_slope": self.negative_slope,
            "bias": self.bias,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "EncoderConfig":
        return cls(**{**raw, "hidden_sizes": tuple(raw["hidden_sizes"])})


@dataclass(frozen=True, eq=False)
class MessageIndex:
    """消息傳遞索引：入邊 (targets, sources) 與每個節點的聚合分母 1 + 入度"""

    n_nodes: int
    targets: torch.Tensor
    sources: torch.Tensor
    denominator: torch.Tensor

    @classmethod
    def from_graph(
        cls,
        graph: SimilarityGraph,
        dtype: torch.dtype = torch.float32,
        device: torch.device | str = "cpu",
    ) -> "MessageIndex":
        targets, sources = graph.message_edges()
        counts = np.bincount(targets, minlength=graph.n_nodes)
        return cls(
            n_nodes=graph.n_nodes,
            targets=torch.as_tensor(targets, dtype=torch.long, device=device),
            sources=torch.as_tensor(sources, dtype=torch.long, device=device),
            denominator=torch.as_tensor(1.0 + counts, dtype=dtype, device=device),
        )


@dataclass(frozen=True, eq=False)
class EmbeddingSequence:
    """每篇文章的嵌入序列 G_i，values 形狀為 N×P×D，列由舊到新"""

    anchor: int
    values: torch.Tensor

    @property
    def P(self) -> int:
        return int(self.values.shape[1])

    @property
    def dim(self) -> int:
        return int(self.values.shape[2])

    def article(self, index: int) -> torch.Tensor:
        """文章 index 的 D×P 矩陣"""
        return self.values[index].T


def _as_index(
    graph: SimilarityGraph | MessageIndex, like: torch.Tensor
) -> MessageIndex:
    if isinstance(graph, MessageIndex):
        return graph
    return MessageIndex.from_graph(graph, dtype=like.dtype, device=like.device)


def gnn_layer(
    node_features: torch.Tensor,
    graph: SimilarityGraph | MessageIndex,
    weight: torch.Tensor,
    negative_slope: float = 0.01,
    bias: torch.Tensor | None = None,
) -> torch.Tensor:
    """
    單層均值聚合圖卷積

    Args:
        node_features: (..., N, F_in)，前導維度視為獨立的時間步
        graph: 採樣後的圖或預先建立的 MessageIndex
        weight: F_in × F_out

    Returns:
        torch.Tensor: (..., N, F_out)
    """
    index = _as_index(graph, node_features)
    if node_features.shape[-1] != weight.shape[0]:
        raise ShapeMismatchError(
            "node features vs weight", tuple(node_features.shape), tuple(weight.shape)
        )
    if node_features.shape[-2] != index.n_nodes:
        raise ShapeMismatchError(
            "node features vs graph nodes", tuple(node_features.shape), index.n_nodes
        )

    transformed = node_features @ weight
    # 自身 + 入邊鄰居之和
    summed = transformed.index_add(
        -2, index.targets, transformed.index_select(-2, index.sources)
    )
    mean = summed / index.denominator.to(transformed.dtype).unsqueeze(-1)
    if bias is not None:
        mean = mean + bias
    return F.leaky_relu(mean, negative_slope=negative_slope)


class GNNLayer(nn.Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        negative_slope: float = 0.01,
        bias: bool = False,
    ):
        super().__init__()
        self.negative_slope = negative_slope
        self.weight = nn.Parameter(torch.empty(in_features, out_features))
        self.bias = nn.Parameter(torch.zeros(out_features)) if bias else None
        # 均勻分佈 ±√(6/(F_in+F_out))
        nn.init.xavier_uniform_(self.weight)

    def forward(self, x: torch.Tensor, index: MessageIndex) -> torch.Tensor:
        return gnn_layer(x, index, self.weight, self.negative_slope, self.bias)


class GraphEncoder(nn.Module):
    """多層 GNN，權重在窗口時間步之間共享"""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        sizes = (config.input_dim, *config.hidden_sizes)
        self.layers = nn.ModuleList(
            GNNLayer(sizes[k], sizes[k + 1], config.negative_slope, config.bias)
            for k in range(len(config.hidden_sizes))
        )
        self.dropout = nn.Dropout(config.dropout)
        debug_log(
            f"GraphEncoder: 層 {list(sizes)}, 參數量 {self.parameter_count()}"
        )

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def forward(self, node_features: torch.Tensor, index: MessageIndex) -> torch.Tensor:
        """
        Args:
            node_features: N×P×F

        Returns:
            torch.Tensor: N×P×D
        """
        # 時間步移到前導維度，每個步驟獨立聚合
        h = node_features.transpose(0, 1)
        for layer in self.layers:
            h = self.dropout(layer(h, index))
        return h.transpose(0, 1)


def encode_window(
    features: NodeFeatureWindow,
    graph: SimilarityGraph | MessageIndex,
    encoder: GraphEncoder,
    training: bool = False,
) -> EmbeddingSequence:
    """
    對窗口的每個時間步套用同一個編碼器

    training=False 時關閉 dropout，重複呼叫結果相同。
    """
    if features.P < 1:
        raise ShapeMismatchError("window steps", features.P, ">= 1")
    reference = next(encoder.parameters())
    values = torch.as_tensor(
        features.values, dtype=reference.dtype, device=reference.device
    )
    index = _as_index(graph, values)

    was_training = encoder.training
    encoder.train(training)
    try:
        if training:
            embeddings = encoder(values, index)
        else:
            with torch.no_grad():
                embeddings = encoder(values, index)
    finally:
        encoder.train(was_training)
    return EmbeddingSequence(anchor=features.anchor, values=embeddings)
