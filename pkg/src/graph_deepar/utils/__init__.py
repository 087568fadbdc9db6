"""
工具模組
========

錯誤處理與運行時間記錄。產物存儲請直接從 utils.artifact_store 導入。
"""

from .error_handler import ErrorHandler, ErrorSeverity, ErrorType
from .runtime_monitor import RuntimeMonitor, RuntimeSnapshot


__all__ = [
    "ErrorHandler",
    "ErrorSeverity",
    "ErrorType",
    "RuntimeMonitor",
    "RuntimeSnapshot",
]
