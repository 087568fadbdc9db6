#!/usr/bin/env python3
"""
統一調試日誌模組
================

提供統一的調試日誌功能，確保調試輸出不會混入 CLI 的標準輸出
（報表表格、機器可解析的結果）。所有調試輸出都會發送到 stderr，
並且只在調試模式啟用時才輸出。

使用方法：
```python
from .debug import train_debug_log as debug_log

debug_log("epoch 3 完成")
```

環境變數控制：
- GRAPH_DEEPAR_DEBUG=true/1/yes/on: 啟用調試模式
- GRAPH_DEEPAR_DEBUG=false/0/no/off: 關閉調試模式（默認）
"""

import os
import sys
import warnings
from typing import Any


DEBUG_ENV_VAR = "GRAPH_DEEPAR_DEBUG"
_TRUTHY = ("true", "1", "yes", "on")


class DataQualityWarning(UserWarning):
    """數據品質警告（未知類別、空窗口集合、缺少驗證窗口等）"""


def debug_log(message: Any, prefix: str = "DEBUG") -> None:
    """
    輸出調試訊息到標準錯誤，避免污染標準輸出

    Args:
        message: 要輸出的調試信息
        prefix: 調試信息的前綴標識，默認為 "DEBUG"
    """
    if not is_debug_enabled():
        return

    try:
        if not isinstance(message, str):
            message = str(message)

        try:
            print(f"[{prefix}] {message}", file=sys.stderr, flush=True)
        except UnicodeEncodeError:
            safe_message = message.encode("ascii", errors="replace").decode("ascii")
            print(f"[{prefix}] {safe_message}", file=sys.stderr, flush=True)
    except Exception:
        # 日誌失敗不影響主流程
        pass


def warn_data_quality(message: str, prefix: str = "DATA") -> None:
    """發出數據品質警告，同時寫入調試日誌"""
    debug_log(f"警告: {message}", prefix)
    warnings.warn(message, DataQualityWarning, stacklevel=3)


def data_debug_log(message: Any) -> None:
    """數據模組專用的調試日誌"""
    debug_log(message, "DATA")


def graph_debug_log(message: Any) -> None:
    """圖構建模組專用的調試日誌"""
    debug_log(message, "GRAPH")


def model_debug_log(message: Any) -> None:
    """模型模組專用的調試日誌"""
    debug_log(message, "MODEL")


def train_debug_log(message: Any) -> None:
    """訓練模組專用的調試日誌"""
    debug_log(message, "TRAIN")


def eval_debug_log(message: Any) -> None:
    """評估模組專用的調試日誌"""
    debug_log(message, "EVAL")


def cli_debug_log(message: Any) -> None:
    """命令列模組專用的調試日誌"""
    debug_log(message, "CLI")


def is_debug_enabled() -> bool:
    """檢查是否啟用了調試模式"""
    return os.getenv(DEBUG_ENV_VAR, "").lower() in _TRUTHY


def set_debug_mode(enabled: bool) -> None:
    """設置調試模式（用於測試）"""
    os.environ[DEBUG_ENV_VAR] = "true" if enabled else "false"
