"""
鄰域採樣
========

每個節點的入邊鄰居若超過 max_neighbors，則均勻隨機保留 max_neighbors 個，
產生只用於消息傳遞的非對稱視圖。訓練時每個 epoch 以新的 seed 重新採樣。
"""

import numpy as np

from ..debug import graph_debug_log as debug_log
from ..exceptions import ConfigurationError
from .similarity import SimilarityGraph


def epoch_seed(seed: int, epoch: int) -> int:
    """由基礎 seed 與 epoch 派生可重現的採樣 seed"""
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1)[0])


def sample_neighborhood(
    graph: SimilarityGraph, max_neighbors: int, seed: int
) -> SimilarityGraph:
    """
    對每個節點的入邊鄰居做無放回均勻採樣

    Args:
        graph: 儲存的（未採樣）圖
        max_neighbors: 每個節點保留的最大入邊數
        seed: 隨機種子；同一 seed 產生相同的採樣視圖

    Returns:
        SimilarityGraph: 帶 sampled_incoming 視圖的新圖；
            max_neighbors ≥ 最大度數時原樣返回
    """
    if max_neighbors < 0:
        raise ConfigurationError(f"max_neighbors must be ≥ 0, got {max_neighbors}")

    base = graph.without_sampling()
    degree = base.degree
    if degree.size == 0 or max_neighbors >= int(degree.max(initial=0)):
        return base

    targets, sources = base.message_edges()
    order = np.lexsort((sources, targets))
    targets, sources = targets[order], sources[order]
    counts = np.bincount(targets, minlength=base.n_nodes)
    indptr = np.concatenate([[0], np.cumsum(counts)])

    rng = np.random.default_rng(seed)
    kept_targets: list[np.ndarray] = []
    kept_sources: list[np.ndarray] = []
    for node in range(base.n_nodes):
        incoming = sources[indptr[node] : indptr[node + 1]]
        if incoming.size > max_neighbors:
            incoming = np.sort(rng.choice(incoming, size=max_neighbors, replace=False))
        if incoming.size:
            kept_sources.append(incoming)
            kept_targets.append(np.full(incoming.size, node, dtype=np.int64))

    if kept_targets:
        view = (np.concatenate(kept_targets), np.concatenate(kept_sources))
    else:
        view = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))

    debug_log(
        f"鄰域採樣: max_neighbors={max_neighbors}, seed={seed}, "
        f"入邊 {targets.size} → {view[0].size}"
    )
    return SimilarityGraph(
        n_nodes=base.n_nodes,
        src=base.src,
        dst=base.dst,
        scores=base.scores,
        threshold=base.threshold,
        article_ids=base.article_ids,
        schema_hash=base.schema_hash,
        sampled_incoming=view,
    )
