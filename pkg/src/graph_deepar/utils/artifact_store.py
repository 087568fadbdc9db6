"""
產物存儲管理
============

提供統一的產物寫入功能，包括：
- 同目錄臨時文件 + os.replace 的原子寫入
- 臨時文件追蹤與失敗/退出時自動清理
- `<name>.meta.json` 旁路元數據（config_hash、schema_hash、產物類型）
- 產物之間的雜湊校驗
"""

import atexit
import hashlib
import json
import os
import tempfile
import threading
import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

from ..debug import debug_log
from ..exceptions import ArtifactError, SchemaMismatchError
from .error_handler import ErrorHandler, ErrorType


META_SUFFIX = ".meta.json"


def stable_hash(payload: Any, length: int = 16) -> str:
    """對可 JSON 序列化的對象計算穩定雜湊"""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:length]


def meta_path_for(path: Path | str) -> Path:
    path = Path(path)
    return path.with_name(path.name + META_SUFFIX)


def read_meta(path: Path | str) -> dict[str, Any]:
    """讀取產物的旁路元數據"""
    meta_path = meta_path_for(path)
    if not meta_path.exists():
        raise ArtifactError(f"missing metadata file {meta_path}", file_path=str(meta_path))
    return json.loads(meta_path.read_text(encoding="utf-8"))


def check_hash(what: str, expected: str | None, actual: str | None) -> None:
    """兩個雜湊都存在且不同時拋出 SchemaMismatchError"""
    if expected and actual and expected != actual:
        raise SchemaMismatchError(what, expected, actual)


class ArtifactStore:
    """輸出目錄下的產物寫入器"""

    _live_temp_files: set[str] = set()
    _lock = threading.Lock()
    _atexit_registered = False

    def __init__(self, out_dir: Path | str, config_hash: str | None = None):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.config_hash = config_hash
        self.written: list[Path] = []
        self.stats: dict[str, int | float] = {
            "artifacts_written": 0,
            "temp_files_created": 0,
            "last_write": 0.0,
        }

        with ArtifactStore._lock:
            if not ArtifactStore._atexit_registered:
                atexit.register(ArtifactStore.cleanup_temp_files)
                ArtifactStore._atexit_registered = True

    def path(self, name: str) -> Path:
        return self.out_dir / name

    @contextmanager
    def atomic_path(self, name: str) -> Iterator[Path]:
        """
        提供一個臨時路徑，區塊成功結束後原子替換為目標文件

        Args:
            name: 目標文件名（相對於輸出目錄）
        """
        target = self.path(name)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, temp_name = tempfile.mkstemp(
            prefix=f".{target.name}.", suffix=".tmp", dir=target.parent
        )
        os.close(fd)
        with ArtifactStore._lock:
            ArtifactStore._live_temp_files.add(temp_name)
        self.stats["temp_files_created"] += 1

        try:
            yield Path(temp_name)
            os.replace(temp_name, target)
        except Exception as e:
            error_id = ErrorHandler.log_error_with_context(
                e,
                context={"operation": "寫入產物", "file_path": str(target)},
                error_type=ErrorType.FILE_IO,
            )
            debug_log(f"寫入產物失敗 [錯誤ID: {error_id}]: {e}", "ARTIFACT")
            raise
        finally:
            with ArtifactStore._lock:
                ArtifactStore._live_temp_files.discard(temp_name)
            if os.path.exists(temp_name):
                os.remove(temp_name)

        self.written.append(target)
        self.stats["artifacts_written"] += 1
        self.stats["last_write"] = time.time()
        debug_log(f"寫入產物: {target}", "ARTIFACT")

    def write(
        self,
        name: str,
        writer: Callable[[Path], None],
        kind: str,
        schema_hash: str | None = None,
        extra: dict[str, Any] | None = None,
    ) -> Path:
        """
        以 writer(temp_path) 寫入產物並產生元數據

        Returns:
            Path: 最終產物路徑
        """
        with self.atomic_path(name) as temp_path:
            writer(temp_path)
        self.write_meta(name, kind=kind, schema_hash=schema_hash, extra=extra)
        return self.path(name)

    def write_text(self, name: str, text: str, kind: str, **kwargs: Any) -> Path:
        return self.write(
            name, lambda p: p.write_text(text, encoding="utf-8"), kind=kind, **kwargs
        )

    def write_meta(
        self,
        name: str,
        kind: str,
        schema_hash: str | None = None,
        extra: dict[str, Any] | None = None,
    ) -> Path:
        meta: dict[str, Any] = {
            "kind": kind,
            "config_hash": self.config_hash,
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        }
        if schema_hash is not None:
            meta["schema_hash"] = schema_hash
        if extra:
            meta.update(extra)
        meta_name = meta_path_for(self.path(name)).name
        with self.atomic_path(meta_name) as temp_path:
            temp_path.write_text(
                json.dumps(meta, indent=2, sort_keys=True, default=str),
                encoding="utf-8",
            )
        return self.path(meta_name)

    @classmethod
    def cleanup_temp_files(cls) -> int:
        """清理殘留的臨時文件"""
        cleaned = 0
        with cls._lock:
            for temp_name in list(cls._live_temp_files):
                try:
                    if os.path.exists(temp_name):
                        os.remove(temp_name)
                        cleaned += 1
                except Exception as e:
                    debug_log(f"清理臨時文件失敗: {temp_name}: {e}", "ARTIFACT")
                cls._live_temp_files.discard(temp_name)
        return cleaned
