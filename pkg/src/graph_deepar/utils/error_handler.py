"""
統一錯誤處理框架
================

提供統一的錯誤處理機制，包括：
- 錯誤類型分類
- 用戶友好錯誤信息
- 錯誤上下文記錄
- 解決方案建議
- 單行機器可解析錯誤（CLI 退出時使用）

注意：所有錯誤細節都寫入 stderr 調試日誌，不影響 CLI 的標準輸出。
"""

import os
import re
import time
import traceback
from enum import Enum
from typing import Any

from ..debug import debug_log


class ErrorType(Enum):
    """錯誤類型枚舉"""

    DATA_VALIDATION = "data_validation"  # 輸入數據驗證錯誤
    SCHEMA_MISMATCH = "schema_mismatch"  # 產物雜湊不一致
    SHAPE_MISMATCH = "shape_mismatch"  # 形狀不相容
    CONFIGURATION = "configuration"  # 配置錯誤
    FILE_IO = "file_io"  # 文件 I/O 錯誤
    NUMERICAL = "numerical"  # 數值發散
    USAGE = "usage"  # 命令用法錯誤
    SYSTEM = "system"  # 系統錯誤


class ErrorSeverity(Enum):
    """錯誤嚴重程度"""

    LOW = "low"  # 低：不影響核心功能
    MEDIUM = "medium"  # 中：影響部分功能
    HIGH = "high"  # 高：影響核心功能
    CRITICAL = "critical"  # 嚴重：無法繼續執行


class ErrorHandler:
    """統一錯誤處理器"""

    _ERROR_MESSAGES = {
        ErrorType.DATA_VALIDATION: {
            "zh-TW": "輸入數據驗證失敗",
            "en": "Input data validation failed",
        },
        ErrorType.SCHEMA_MISMATCH: {
            "zh-TW": "產物之間的雜湊不一致",
            "en": "Artifact hash mismatch",
        },
        ErrorType.SHAPE_MISMATCH: {
            "zh-TW": "矩陣形狀不相容",
            "en": "Incompatible shapes",
        },
        ErrorType.CONFIGURATION: {
            "zh-TW": "配置出現問題",
            "en": "Configuration issue",
        },
        ErrorType.FILE_IO: {
            "zh-TW": "文件讀寫出現問題",
            "en": "File read/write issue",
        },
        ErrorType.NUMERICAL: {
            "zh-TW": "數值計算發散",
            "en": "Numerical divergence",
        },
        ErrorType.USAGE: {
            "zh-TW": "命令用法錯誤",
            "en": "Invalid command usage",
        },
        ErrorType.SYSTEM: {
            "zh-TW": "系統出現問題",
            "en": "System issue",
        },
    }

    _ERROR_SOLUTIONS = {
        ErrorType.DATA_VALIDATION: {
            "zh-TW": ["檢查需求文件中的重複行與負值", "確認靜態特徵文件包含所有文章"],
            "en": [
                "Check the demand file for duplicate rows and negative values",
                "Make sure the static file lists every article",
            ],
        },
        ErrorType.SCHEMA_MISMATCH: {
            "zh-TW": ["使用同一份數據重新執行 build-graph", "必要時使用 --force"],
            "en": [
                "Re-run build-graph on the same dataset",
                "Pass --force if mixing artifacts is intended",
            ],
        },
        ErrorType.CONFIGURATION: {
            "zh-TW": ["檢查配置文件的區段與鍵名", "確認 --set 覆寫格式為 section.key=value"],
            "en": [
                "Check config sections and key names",
                "Use --set section.key=value for overrides",
            ],
        },
        ErrorType.NUMERICAL: {
            "zh-TW": ["降低學習率", "檢查需求數據中的極端值"],
            "en": ["Lower the learning rate", "Check the demand data for outliers"],
        },
        ErrorType.FILE_IO: {
            "zh-TW": ["檢查文件是否存在", "確認輸出目錄可寫入"],
            "en": ["Check that the file exists", "Check the output directory is writable"],
        },
    }

    @staticmethod
    def get_current_language() -> str:
        """獲取當前語言設置"""
        return os.getenv("GRAPH_DEEPAR_LANGUAGE", "zh-TW")

    @staticmethod
    def get_error_message(error_type: ErrorType) -> str:
        """獲取錯誤類型對應的用戶信息"""
        language = ErrorHandler.get_current_language()
        messages = ErrorHandler._ERROR_MESSAGES.get(error_type, {})
        return messages.get(language, messages.get("zh-TW", "發生未知錯誤"))

    @staticmethod
    def classify_error(error: Exception) -> ErrorType:
        """
        根據異常類型自動分類錯誤

        Args:
            error: Python 異常對象

        Returns:
            ErrorType: 錯誤類型
        """
        declared = getattr(error, "error_type", None)
        if isinstance(declared, ErrorType):
            return declared

        error_name = type(error).__name__.lower()
        error_message = str(error).lower()

        if isinstance(error, (FileNotFoundError, PermissionError, IsADirectoryError)):
            return ErrorType.FILE_IO
        if "hash" in error_message and "mismatch" in error_message:
            return ErrorType.SCHEMA_MISMATCH
        if "shape" in error_message or "size mismatch" in error_message:
            return ErrorType.SHAPE_MISMATCH
        if re.search(r"\b(nan|inf)\b|non-finite", error_message):
            return ErrorType.NUMERICAL
        if any(keyword in error_name for keyword in ["validation", "value", "type"]):
            return ErrorType.DATA_VALIDATION
        if any(keyword in error_message for keyword in ["config", "setting"]):
            return ErrorType.CONFIGURATION

        return ErrorType.SYSTEM

    @staticmethod
    def format_user_error(
        error: Exception,
        error_type: ErrorType | None = None,
        context: dict[str, Any] | None = None,
        include_technical: bool = False,
    ) -> str:
        """
        將技術錯誤轉換為用戶友好的錯誤信息

        Args:
            error: Python 異常對象
            error_type: 錯誤類型（可選，會自動分類）
            context: 錯誤上下文信息
            include_technical: 是否包含技術細節

        Returns:
            str: 用戶友好的錯誤信息
        """
        if error_type is None:
            error_type = ErrorHandler.classify_error(error)

        language = ErrorHandler.get_current_language()
        parts = [ErrorHandler.get_error_message(error_type)]

        if context:
            if context.get("operation"):
                label = "Operation" if language == "en" else "操作"
                parts.append(f"{label}: {context['operation']}")
            if context.get("file_path"):
                label = "File" if language == "en" else "文件"
                parts.append(f"{label}: {context['file_path']}")

        if include_technical:
            label = "Technical details" if language == "en" else "技術細節"
            parts.append(f"{label}: {type(error).__name__}: {error!s}")

        return "\n".join(parts)

    @staticmethod
    def get_error_solutions(error_type: ErrorType) -> list[str]:
        """獲取錯誤解決建議"""
        language = ErrorHandler.get_current_language()
        solutions = ErrorHandler._ERROR_SOLUTIONS.get(error_type, {})
        return solutions.get(language, solutions.get("zh-TW", []))

    @staticmethod
    def log_error_with_context(
        error: Exception,
        context: dict[str, Any] | None = None,
        error_type: ErrorType | None = None,
        severity: ErrorSeverity = ErrorSeverity.MEDIUM,
    ) -> str:
        """
        記錄帶上下文的錯誤信息

        Returns:
            str: 錯誤 ID，用於追蹤
        """
        error_id = f"ERR_{int(time.time())}_{id(error) % 10000}"

        if error_type is None:
            error_type = ErrorHandler.classify_error(error)

        debug_log(f"錯誤記錄 [{error_id}]: {error_type.value} - {error!s}", "ERROR")

        merged = dict(getattr(error, "context", {}) or {})
        if context:
            merged.update(context)
        if merged:
            debug_log(f"錯誤上下文 [{error_id}]: {merged}", "ERROR")

        if severity in [ErrorSeverity.HIGH, ErrorSeverity.CRITICAL]:
            debug_log(f"錯誤堆棧 [{error_id}]:\n{traceback.format_exc()}", "ERROR")

        return error_id

    @staticmethod
    def exit_code_for(error: Exception) -> int:
        """錯誤對應的 CLI 退出碼"""
        code = getattr(error, "exit_code", None)
        if isinstance(code, int):
            return code
        if ErrorHandler.classify_error(error) == ErrorType.SCHEMA_MISMATCH:
            return 3
        return 1

    @staticmethod
    def format_machine_error(error: Exception, error_id: str | None = None) -> str:
        """
        單行機器可解析錯誤

        格式: error type=<type> code=<exit> id=<id> message="<text>"
        """
        error_type = ErrorHandler.classify_error(error)
        text = " ".join(str(error).split()).replace('"', "'")
        parts = [
            "error",
            f"type={error_type.value}",
            f"code={ErrorHandler.exit_code_for(error)}",
        ]
        if error_id:
            parts.append(f"id={error_id}")
        parts.append(f'message="{text}"')
        return " ".join(parts)

    @staticmethod
    def create_error_response(
        error: Exception,
        context: dict[str, Any] | None = None,
        error_type: ErrorType | None = None,
        include_solutions: bool = True,
        for_user: bool = True,
    ) -> dict[str, Any]:
        """
        創建標準化的錯誤響應（寫入 run 摘要檔）

        Returns:
            Dict[str, Any]: 標準化錯誤響應
        """
        if error_type is None:
            error_type = ErrorHandler.classify_error(error)

        error_id = ErrorHandler.log_error_with_context(error, context, error_type)

        response: dict[str, Any] = {
            "success": False,
            "error_id": error_id,
            "error_type": error_type.value,
            "exit_code": ErrorHandler.exit_code_for(error),
            "message": ErrorHandler.format_user_error(
                error, error_type, context, include_technical=not for_user
            ),
        }

        if include_solutions:
            response["solutions"] = ErrorHandler.get_error_solutions(error_type)

        if context and not for_user:
            response["context"] = context

        return response
