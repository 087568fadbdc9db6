"""
優化器註冊表
============

以名稱選擇優化器；預設 adam。Ranger 類變體可透過 register_optimizer 加入。
"""

from collections.abc import Callable, Iterable
from typing import Any

import torch

from ..debug import train_debug_log as debug_log
from ..exceptions import ConfigurationError


OptimizerFactory = Callable[..., torch.optim.Optimizer]

_REGISTRY: dict[str, OptimizerFactory] = {
    "adam": torch.optim.Adam,
    "adamw": torch.optim.AdamW,
    "radam": torch.optim.RAdam,
    "sgd": torch.optim.SGD,
}


def register_optimizer(name: str, factory: OptimizerFactory, replace: bool = False) -> None:
    """
    註冊優化器

    Args:
        name: 配置中使用的名稱（不分大小寫）
        factory: factory(params, lr=..., **settings) → Optimizer
        replace: 是否允許覆蓋已有名稱
    """
    key = name.lower()
    if key in _REGISTRY and not replace:
        raise ConfigurationError(f"optimizer {name!r} is already registered")
    _REGISTRY[key] = factory
    debug_log(f"註冊優化器: {key}")


def available_optimizers() -> list[str]:
    return sorted(_REGISTRY)


def build_optimizer(
    name: str,
    parameters: Iterable[torch.nn.Parameter],
    learning_rate: float,
    settings: dict[str, Any] | None = None,
) -> torch.optim.Optimizer:
    key = name.lower()
    if key not in _REGISTRY:
        raise ConfigurationError(
            f"unknown optimizer {name!r}; available: {available_optimizers()}"
        )
    try:
        return _REGISTRY[key](parameters, lr=learning_rate, **(settings or {}))
    except TypeError as e:
        raise ConfigurationError(f"invalid settings for optimizer {name!r}: {e}") from e
