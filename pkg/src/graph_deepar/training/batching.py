"""
批次取樣
========

random 模式對全部窗口均勻洗牌後切塊；synchronized 模式按錨點分組，
組內洗牌切塊、組的順序再洗牌，每個批次只有一個錨點，
因此一份圖節點特徵快照即可服務整個批次。

BatchProducer 在背景線程中組裝批次張量（生產者/消費者），
參數更新仍在主線程中嚴格串行。
"""

import queue
import threading
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..data.windows import WindowSet
from ..debug import train_debug_log as debug_log
from ..exceptions import ConfigurationError


@dataclass(frozen=True, eq=False)
class WindowBatch:
    """一個批次：窗口集合中的位置索引"""

    batch_id: int
    positions: np.ndarray

    def __len__(self) -> int:
        return int(self.positions.size)


def _check_batch_size(batch_size: int) -> None:
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be ≥ 1, got {batch_size}")


def random_batches(windows: WindowSet, batch_size: int, seed: int) -> list[WindowBatch]:
    """均勻洗牌後切為大小 ≤ batch_size 的批次"""
    _check_batch_size(batch_size)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(windows))
    return [
        WindowBatch(batch_id=b, positions=order[start : start + batch_size])
        for b, start in enumerate(range(0, order.size, batch_size))
    ]


def synchronized_batches(
    windows: WindowSet, batch_size: int, seed: int
) -> list[WindowBatch]:
    """按錨點分組的批次，每個批次只含單一錨點"""
    _check_batch_size(batch_size)
    rng = np.random.default_rng(seed)
    anchors = windows.anchors()
    chunks_per_anchor: list[list[np.ndarray]] = []
    for anchor in anchors:
        group = np.flatnonzero(windows.anchor == anchor)
        group = group[rng.permutation(group.size)]
        chunks_per_anchor.append(
            [group[s : s + batch_size] for s in range(0, group.size, batch_size)]
        )

    batches: list[WindowBatch] = []
    for g in rng.permutation(len(chunks_per_anchor)):
        for chunk in chunks_per_anchor[g]:
            batches.append(WindowBatch(batch_id=len(batches), positions=chunk))
    return batches


def anchor_batches(windows: WindowSet, batch_size: int) -> list[WindowBatch]:
    """不洗牌的單錨點批次（驗證與推論用）"""
    _check_batch_size(batch_size)
    batches: list[WindowBatch] = []
    for anchor in windows.anchors():
        group = np.flatnonzero(windows.anchor == anchor)
        for s in range(0, group.size, batch_size):
            batches.append(
                WindowBatch(batch_id=len(batches), positions=group[s : s + batch_size])
            )
    return batches


_DONE = object()


class BatchProducer:
    """
    背景批次組裝

    num_workers=0 時在呼叫線程中依序組裝；1 時由一個背景線程預先組裝，
    佇列長度為 prefetch。組裝錯誤會在消費端重新拋出。
    """

    def __init__(
        self,
        batches: list[WindowBatch],
        assemble: Callable[[WindowBatch], Any],
        num_workers: int = 0,
        prefetch: int = 2,
    ):
        if num_workers not in (0, 1):
            raise ConfigurationError(f"num_workers must be 0 or 1, got {num_workers}")
        self.batches = batches
        self.assemble = assemble
        self.num_workers = num_workers
        self.prefetch = max(1, prefetch)

    def __iter__(self) -> Iterator[tuple[WindowBatch, Any]]:
        if self.num_workers == 0:
            for batch in self.batches:
                yield batch, self.assemble(batch)
            return

        buffer: queue.Queue = queue.Queue(maxsize=self.prefetch)
        stop = threading.Event()

        def produce() -> None:
            try:
                for batch in self.batches:
                    if stop.is_set():
                        return
                    buffer.put((batch, self.assemble(batch)))
            except Exception as e:
                buffer.put(e)
            finally:
                buffer.put(_DONE)

        worker = threading.Thread(target=produce, daemon=True, name="batch-producer")
        worker.start()
        try:
            while True:
                item = buffer.get()
                if item is _DONE:
                    break
                if isinstance(item, Exception):
                    raise item
                yield item
        finally:
            stop.set()
            # 讓生產者從阻塞的 put 中退出
            while worker.is_alive():
                try:
                    buffer.get_nowait()
                except queue.Empty:
                    worker.join(timeout=0.05)
            debug_log("背景批次線程已結束")
