#!/usr/bin/env python3
"""
運行時間記錄測試
================

測試 RuntimeMonitor 的快照與 runtime.json 合併寫入。
"""

import json
import time

import pytest

from graph_deepar.utils.runtime_monitor import (
    RuntimeMonitor,
    RuntimeSnapshot,
    read_runtime,
    write_runtime,
)


class TestRuntimeSnapshot:
    """測試運行快照數據類"""

    def test_units(self):
        snapshot = RuntimeSnapshot(
            phase="train",
            wall_seconds=90.0,
            peak_rss_bytes=200 * 1024**2,
            start_rss_bytes=100 * 1024**2,
            samples=4,
        )

        assert snapshot.minutes == pytest.approx(1.5)
        assert snapshot.peak_rss_mb == pytest.approx(200.0)


class TestRuntimeMonitor:
    """測試階段監控器"""

    def test_context_manager(self):
        with RuntimeMonitor("train", sampling_interval=0.01) as monitor:
            time.sleep(0.05)

        snapshot = monitor.snapshot
        assert snapshot is not None
        assert snapshot.phase == "train"
        assert snapshot.wall_seconds >= 0.04
        assert snapshot.peak_rss_bytes >= snapshot.start_rss_bytes > 0
        assert snapshot.samples >= 2

    def test_snapshot_after_exception(self):
        with pytest.raises(RuntimeError):
            with RuntimeMonitor("inference", sampling_interval=0.01) as monitor:
                raise RuntimeError("boom")

        assert monitor.snapshot is not None
        assert monitor.snapshot.phase == "inference"


class TestRuntimeFile:
    """測試 runtime.json"""

    def _snapshot(self, phase, seconds):
        return RuntimeSnapshot(phase, seconds, 2 * 1024**2, 1024**2, 3)

    def test_phases_merge_per_model(self, temp_dir):
        path = temp_dir / "runtime.json"

        write_runtime(path, "deepar", [self._snapshot("train", 60.0)])
        write_runtime(path, "deepar", [self._snapshot("inference", 6.0)])
        write_runtime(path, "graphdeepar", [self._snapshot("train", 120.0)])

        timings = read_runtime(path)
        assert timings == {
            "deepar": {"train_minutes": 1.0, "inference_minutes": 0.1},
            "graphdeepar": {"train_minutes": 2.0},
        }
        raw = json.loads(path.read_text())
        assert raw["deepar"]["train_peak_rss_mb"] == pytest.approx(2.0)
        assert raw["deepar"]["train_detail"]["samples"] == 3

    def test_rerun_overwrites_phase(self, temp_dir):
        path = temp_dir / "runtime.json"

        write_runtime(path, "m", [self._snapshot("train", 60.0)])
        write_runtime(path, "m", [self._snapshot("train", 30.0)])

        assert read_runtime(path)["m"]["train_minutes"] == pytest.approx(0.5)
