"""
文章相似度圖
============

以靜態特徵的餘弦相似度建立無向圖：相似度 ≥ τ 的文章對連邊。
相似度按文章分塊逐塊計算，分塊大小不影響結果；各塊可在線程池中並行，
並按塊順序合併。

邊只儲存一次（src < dst），查詢時對稱展開。消息傳遞使用的入邊視圖
可以被鄰域採樣替換，儲存的圖本身保持對稱不變。
"""

from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from sklearn.preprocessing import normalize

from ..debug import graph_debug_log as debug_log
from ..exceptions import ArtifactError, ConfigurationError, DataValidationError
from ..utils.artifact_store import ArtifactStore, read_meta


# 閾值比較容差：相同向量的餘弦可能因捨入落在 1 − 2e-16
SIMILARITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SimilarityBlock:
    """一個分塊對的相似度（只含 i < j 的文章對）"""

    rows: np.ndarray
    cols: np.ndarray
    scores: np.ndarray


@dataclass(frozen=True, eq=False)
class SimilarityGraph:
    """
    無向相似度圖

    src/dst/scores 為按 (src, dst) 排序的邊列表，src < dst。
    sampled_incoming 為可選的 (targets, sources) 入邊採樣視圖。
    """

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    scores: np.ndarray
    threshold: float
    article_ids: list[str] | None = None
    schema_hash: str | None = None
    sampled_incoming: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self) -> None:
        if not (self.src.shape == self.dst.shape == self.scores.shape):
            raise DataValidationError("edge arrays must have equal length")
        if self.src.size:
            if np.any(self.src >= self.dst):
                raise DataValidationError("edges must be stored once with src < dst")
            if self.dst.max() >= self.n_nodes or self.src.min() < 0:
                raise DataValidationError("edge endpoint outside node range")
        if self.article_ids is not None and len(self.article_ids) != self.n_nodes:
            raise DataValidationError(
                f"graph has {self.n_nodes} nodes but {len(self.article_ids)} article ids"
            )

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    @cached_property
    def degree(self) -> np.ndarray:
        """儲存圖上每個節點的鄰居數 |ℐ(i)|"""
        return np.bincount(
            np.concatenate([self.src, self.dst]), minlength=self.n_nodes
        ).astype(np.int64)

    @property
    def is_sampled(self) -> bool:
        return self.sampled_incoming is not None

    def edge_pairs(self) -> set[tuple[int, int]]:
        return set(zip(self.src.tolist(), self.dst.tolist(), strict=True))

    def neighbors(self, node: int) -> np.ndarray:
        """儲存圖上的鄰居（升序）"""
        return np.sort(
            np.concatenate(
                [self.dst[self.src == node], self.src[self.dst == node]]
            )
        )

    def message_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """當前視圖的 (targets, sources)；未採樣時為對稱展開的全部邊"""
        if self.sampled_incoming is not None:
            return self.sampled_incoming
        return (
            np.concatenate([self.src, self.dst]),
            np.concatenate([self.dst, self.src]),
        )

    def incoming_degree(self) -> np.ndarray:
        targets, _ = self.message_edges()
        return np.bincount(targets, minlength=self.n_nodes).astype(np.int64)

    def without_sampling(self) -> "SimilarityGraph":
        return replace(self, sampled_incoming=None)


def _check_features(features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] < 1:
        raise DataValidationError(
            f"features must be an N×M matrix with M ≥ 1, got shape {features.shape}"
        )
    finite = np.isfinite(features).all(axis=1)
    if not finite.all():
        bad = np.flatnonzero(~finite).tolist()
        raise DataValidationError(
            f"non-finite feature values in rows {bad[:20]}", rows=bad
        )
    return features


def _block(
    unit: np.ndarray, start_i: int, stop_i: int, start_j: int, stop_j: int
) -> SimilarityBlock:
    scores = unit[start_i:stop_i] @ unit[start_j:stop_j].T
    np.clip(scores, -1.0, 1.0, out=scores)
    rows, cols = np.nonzero(
        np.arange(start_i, stop_i)[:, None] < np.arange(start_j, stop_j)[None, :]
    )
    return SimilarityBlock(
        rows=rows + start_i, cols=cols + start_j, scores=scores[rows, cols]
    )


def pairwise_similarity(
    features: np.ndarray,
    chunk_size: int | None = None,
    max_workers: int = 1,
) -> Iterator[SimilarityBlock]:
    """
    分塊計算所有 i < j 文章對的餘弦相似度

    零範數的行與所有其他行相似度為 0。

    Args:
        features: N×M 特徵矩陣
        chunk_size: 每塊的文章數；None 表示不分塊
        max_workers: > 1 時在線程池中並行計算分塊對，仍按塊順序產出

    Yields:
        SimilarityBlock: 按 (i 塊, j 塊) 順序
    """
    features = _check_features(features)
    n = features.shape[0]
    if chunk_size is None or chunk_size >= n:
        chunk_size = max(n, 1)
    if chunk_size < 1:
        raise ConfigurationError(f"chunk_size must be ≥ 1, got {chunk_size}")

    unit = normalize(features, norm="l2", axis=1)
    bounds = [(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]
    pairs = [
        (bi[0], bi[1], bj[0], bj[1])
        for a, bi in enumerate(bounds)
        for bj in bounds[a:]
    ]
    debug_log(f"相似度計算: N={n}, 分塊大小 {chunk_size}, {len(pairs)} 個分塊對")

    if max_workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            # map 保持輸入順序
            yield from executor.map(lambda p: _block(unit, *p), pairs)
    else:
        for p in pairs:
            yield _block(unit, *p)


def build_graph(
    similarities: Iterator[SimilarityBlock] | Sequence[SimilarityBlock],
    threshold: float,
    n_nodes: int,
    article_ids: list[str] | None = None,
    schema_hash: str | None = None,
) -> SimilarityGraph:
    """
    以相似度閾值建立圖

    相似度 ≥ threshold（含 1e-12 容差）的文章對連邊，邊按 (i, j) 升序。

    Args:
        similarities: pairwise_similarity 的輸出
        threshold: τ ∈ (−1, 1]
        n_nodes: 節點數 N
    """
    if not -1.0 < threshold <= 1.0:
        raise ConfigurationError(f"threshold must lie in (-1, 1], got {threshold}")

    src_parts: list[np.ndarray] = []
    dst_parts: list[np.ndarray] = []
    score_parts: list[np.ndarray] = []
    for block in similarities:
        keep = block.scores >= threshold - SIMILARITY_TOLERANCE
        if keep.any():
            src_parts.append(block.rows[keep])
            dst_parts.append(block.cols[keep])
            score_parts.append(block.scores[keep])

    if src_parts:
        src = np.concatenate(src_parts).astype(np.int64)
        dst = np.concatenate(dst_parts).astype(np.int64)
        scores = np.concatenate(score_parts).astype(np.float64)
        order = np.lexsort((dst, src))
        src, dst, scores = src[order], dst[order], scores[order]
    else:
        src = np.zeros(0, dtype=np.int64)
        dst = np.zeros(0, dtype=np.int64)
        scores = np.zeros(0, dtype=np.float64)

    graph = SimilarityGraph(
        n_nodes=n_nodes,
        src=src,
        dst=dst,
        scores=scores,
        threshold=float(threshold),
        article_ids=article_ids,
        schema_hash=schema_hash,
    )
    debug_log(f"建圖完成: τ={threshold}, {n_nodes} 個節點, {graph.n_edges} 條邊")
    return graph


def graph_from_features(
    features: np.ndarray,
    threshold: float,
    chunk_size: int | None = None,
    max_workers: int = 1,
    article_ids: list[str] | None = None,
    schema_hash: str | None = None,
) -> SimilarityGraph:
    """pairwise_similarity + build_graph 的便捷組合"""
    features = np.asarray(features)
    return build_graph(
        pairwise_similarity(features, chunk_size=chunk_size, max_workers=max_workers),
        threshold=threshold,
        n_nodes=features.shape[0],
        article_ids=article_ids,
        schema_hash=schema_hash,
    )


def save_graph(
    graph: SimilarityGraph, store: ArtifactStore, name: str = "graph.csv"
) -> Path:
    """寫出邊文件 `src,dst,similarity` 與元數據（τ、N、文章 id、schema 雜湊）"""

    def writer(path: Path) -> None:
        frame = pd.DataFrame(
            {"src": graph.src, "dst": graph.dst, "similarity": graph.scores}
        )
        frame.to_csv(path, index=False, float_format="%.12f")

    return store.write(
        name,
        writer,
        kind="graph",
        schema_hash=graph.schema_hash,
        extra={
            "threshold": graph.threshold,
            "n_nodes": graph.n_nodes,
            "n_edges": graph.n_edges,
            "article_ids": graph.article_ids,
        },
    )


def load_graph(path: Path | str) -> SimilarityGraph:
    """讀取 save_graph 寫出的邊文件與元數據"""
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"graph file not found: {path}", file_path=str(path))
    meta: dict[str, Any] = read_meta(path)
    frame = pd.read_csv(path)
    expected = ["src", "dst", "similarity"]
    if list(frame.columns) != expected:
        raise ArtifactError(
            f"graph file header must be {','.join(expected)}, got {list(frame.columns)}"
        )
    graph = SimilarityGraph(
        n_nodes=int(meta["n_nodes"]),
        src=frame["src"].to_numpy(dtype=np.int64),
        dst=frame["dst"].to_numpy(dtype=np.int64),
        scores=frame["similarity"].to_numpy(dtype=np.float64),
        threshold=float(meta["threshold"]),
        article_ids=meta.get("article_ids"),
        schema_hash=meta.get("schema_hash"),
    )
    debug_log(f"讀取圖: {path} ({graph.n_nodes} 個節點, {graph.n_edges} 條邊)")
    return graph
