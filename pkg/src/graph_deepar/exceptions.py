"""
例外類型
========

所有領域錯誤都繼承自 GraphDeepARError，並攜帶錯誤類型與 CLI 退出碼，
由 utils.error_handler.ErrorHandler 統一格式化。
"""

from typing import Any

from .utils.error_handler import ErrorType


class GraphDeepARError(Exception):
    """套件錯誤基類"""

    error_type: ErrorType = ErrorType.SYSTEM
    exit_code: int = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context: dict[str, Any] = context


class DataValidationError(GraphDeepARError, ValueError):
    """輸入數據不符合契約（重複行、負需求、缺失文章等）"""

    error_type = ErrorType.DATA_VALIDATION


class ShapeMismatchError(GraphDeepARError, ValueError):
    """張量或矩陣形狀不相容"""

    error_type = ErrorType.SHAPE_MISMATCH

    def __init__(self, message: str, left: Any = None, right: Any = None):
        super().__init__(f"{message}: {left} vs {right}", left=left, right=right)


class ConfigurationError(GraphDeepARError, ValueError):
    """配置值無效或彼此矛盾"""

    error_type = ErrorType.CONFIGURATION


class SchemaMismatchError(GraphDeepARError):
    """兩個產物的 schema / config 雜湊不一致"""

    error_type = ErrorType.SCHEMA_MISMATCH
    exit_code = 3

    def __init__(self, what: str, expected: str, actual: str):
        super().__init__(
            f"{what} hash mismatch: expected {expected}, found {actual}",
            expected=expected,
            actual=actual,
        )
        self.expected = expected
        self.actual = actual


class TrainingDivergenceError(GraphDeepARError):
    """訓練損失出現非有限值"""

    error_type = ErrorType.NUMERICAL

    def __init__(self, batch_id: int, epoch: int, loss: float):
        super().__init__(
            f"non-finite loss {loss} at epoch {epoch}, batch {batch_id}",
            batch_id=batch_id,
            epoch=epoch,
        )
        self.batch_id = batch_id
        self.epoch = epoch


class ArtifactError(GraphDeepARError):
    """產物檔案缺失或格式錯誤"""

    error_type = ErrorType.FILE_IO
