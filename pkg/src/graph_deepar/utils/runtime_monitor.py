#!/usr/bin/env python3
"""
運行時間與內存記錄
==================

為訓練與推論階段提供牆鐘時間與進程峰值內存的記錄：
- 背景線程定期採樣進程常駐內存（psutil）
- 以 context manager 形式包住一個階段
- 產出 RuntimeSnapshot，供 runtime_report 彙整
"""

import json
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import psutil

from ..debug import debug_log
from .error_handler import ErrorHandler, ErrorType


@dataclass
class RuntimeSnapshot:
    """單一階段的運行記錄"""

    phase: str
    wall_seconds: float
    peak_rss_bytes: int
    start_rss_bytes: int
    samples: int

    @property
    def minutes(self) -> float:
        return self.wall_seconds / 60.0

    @property
    def peak_rss_mb(self) -> float:
        return self.peak_rss_bytes / 1024**2


class RuntimeMonitor:
    """階段運行監控器"""

    def __init__(self, phase: str, sampling_interval: float = 0.5):
        """
        初始化運行監控器

        Args:
            phase: 階段名稱（train / inference）
            sampling_interval: 內存採樣間隔（秒）
        """
        self.phase = phase
        self.sampling_interval = sampling_interval
        self.process = psutil.Process()

        self._stop_event = threading.Event()
        self._thread: threading.Thread | None = None
        self._start_time = 0.0
        self._start_rss = 0
        self._peak_rss = 0
        self._samples = 0
        self.snapshot: RuntimeSnapshot | None = None

    def __enter__(self) -> "RuntimeMonitor":
        self.start()
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.stop()

    def start(self) -> None:
        """開始記錄"""
        self._start_rss = self._sample_rss()
        self._peak_rss = self._start_rss
        self._samples = 1
        self._stop_event.clear()
        self._start_time = time.perf_counter()

        self._thread = threading.Thread(
            target=self._sampling_loop, name=f"RuntimeMonitor-{self.phase}", daemon=True
        )
        self._thread.start()
        debug_log(f"運行監控開始: {self.phase}", "RUNTIME")

    def stop(self) -> RuntimeSnapshot:
        """停止記錄並產出快照"""
        elapsed = time.perf_counter() - self._start_time
        self._stop_event.set()
        if self._thread and self._thread.is_alive():
            self._thread.join(timeout=5)
        self._record(self._sample_rss())

        self.snapshot = RuntimeSnapshot(
            phase=self.phase,
            wall_seconds=elapsed,
            peak_rss_bytes=self._peak_rss,
            start_rss_bytes=self._start_rss,
            samples=self._samples,
        )
        debug_log(
            f"運行監控結束: {self.phase} {elapsed:.2f}s, "
            f"峰值內存 {self.snapshot.peak_rss_mb:.1f} MB",
            "RUNTIME",
        )
        return self.snapshot

    def _sampling_loop(self) -> None:
        """內存採樣主循環"""
        while not self._stop_event.wait(self.sampling_interval):
            try:
                self._record(self._sample_rss())
            except Exception as e:
                error_id = ErrorHandler.log_error_with_context(
                    e, context={"operation": "內存採樣"}, error_type=ErrorType.SYSTEM
                )
                debug_log(f"內存採樣失敗 [錯誤ID: {error_id}]: {e}", "RUNTIME")
                break

    def _sample_rss(self) -> int:
        return int(self.process.memory_info().rss)

    def _record(self, rss: int) -> None:
        self._samples += 1
        self._peak_rss = max(self._peak_rss, rss)


def write_runtime(path: Path, model: str, snapshots: list[RuntimeSnapshot]) -> None:
    """合併寫入 runtime.json（同一模型的各階段）"""
    payload: dict[str, Any] = {}
    if path.exists():
        payload = json.loads(path.read_text(encoding="utf-8"))
    entry = payload.setdefault(model, {})
    for snapshot in snapshots:
        entry[f"{snapshot.phase}_minutes"] = snapshot.minutes
        entry[f"{snapshot.phase}_peak_rss_mb"] = snapshot.peak_rss_mb
        entry[f"{snapshot.phase}_detail"] = asdict(snapshot)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def read_runtime(path: Path) -> dict[str, dict[str, float]]:
    """讀取 runtime.json，只保留分鐘數欄位"""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return {
        model: {
            key: float(value)
            for key, value in entry.items()
            if key.endswith("_minutes")
        }
        for model, entry in payload.items()
    }
