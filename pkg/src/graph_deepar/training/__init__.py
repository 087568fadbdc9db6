"""
訓練模組
========

批次取樣、優化器註冊表與訓練迴圈。
"""

from .batching import (
    BatchProducer,
    WindowBatch,
    anchor_batches,
    random_batches,
    synchronized_batches,
)
from .optimizers import available_optimizers, build_optimizer, register_optimizer
from .trainer import (
    BatchAssembler,
    Checkpoint,
    EpochRecord,
    GraphOptions,
    TrainConfig,
    TrainResult,
    evaluate_loss,
    history_frame,
    torch_threads,
    train,
    write_history,
)


__all__ = [
    "BatchAssembler",
    "BatchProducer",
    "Checkpoint",
    "EpochRecord",
    "GraphOptions",
    "TrainConfig",
    "TrainResult",
    "WindowBatch",
    "anchor_batches",
    "available_optimizers",
    "build_optimizer",
    "evaluate_loss",
    "history_frame",
    "random_batches",
    "register_optimizer",
    "synchronized_batches",
    "torch_threads",
    "train",
    "write_history",
]
