"""
產物存儲測試模組

測試 ArtifactStore 類的各項功能，包括：
- 原子寫入與臨時文件清理
- 旁路元數據
- 雜湊校驗
"""

import json

import pytest

from graph_deepar.exceptions import ArtifactError, SchemaMismatchError
from graph_deepar.utils.artifact_store import (
    ArtifactStore,
    check_hash,
    meta_path_for,
    read_meta,
    stable_hash,
)


class TestStableHash:
    """穩定雜湊測試類"""

    def test_key_order_irrelevant(self):
        assert stable_hash({"a": 1, "b": [1, 2]}) == stable_hash({"b": [1, 2], "a": 1})

    def test_values_matter(self):
        assert stable_hash({"a": 1}) != stable_hash({"a": 2})

    def test_length(self):
        assert len(stable_hash("x")) == 16
        assert len(stable_hash("x", length=8)) == 8


class TestArtifactStore:
    """產物寫入測試類"""

    def test_write_text_and_meta(self, temp_dir):
        store = ArtifactStore(temp_dir / "run", config_hash="cfg")

        path = store.write_text(
            "graph_stats.json", "{}", kind="graph_stats", schema_hash="sch", extra={"n": 3}
        )

        assert path.read_text() == "{}"
        meta = read_meta(path)
        assert meta["kind"] == "graph_stats"
        assert meta["config_hash"] == "cfg"
        assert meta["schema_hash"] == "sch"
        assert meta["n"] == 3
        assert meta_path_for(path).name == "graph_stats.json.meta.json"
        assert store.written == [path, meta_path_for(path)]
        assert store.stats["artifacts_written"] == 2

    def test_failed_writer_leaves_nothing(self, temp_dir):
        """測試寫入失敗時不留下目標、元數據或臨時文件"""
        store = ArtifactStore(temp_dir)

        def broken(path):
            path.write_text("partial")
            raise RuntimeError("disk full")

        with pytest.raises(RuntimeError, match="disk full"):
            store.write("metrics.csv", broken, kind="metrics")

        assert list(temp_dir.iterdir()) == []
        assert store.written == []

    def test_overwrite_replaces_content(self, temp_dir):
        store = ArtifactStore(temp_dir)

        store.write_text("a.txt", "old", kind="text")
        store.write_text("a.txt", "new", kind="text")

        assert (temp_dir / "a.txt").read_text() == "new"
        assert sorted(p.name for p in temp_dir.iterdir()) == ["a.txt", "a.txt.meta.json"]

    def test_nested_name(self, temp_dir):
        store = ArtifactStore(temp_dir)

        path = store.write_text("data/demand.csv", "x", kind="demand")

        assert path == temp_dir / "data" / "demand.csv"
        assert json.loads(meta_path_for(path).read_text())["kind"] == "demand"

    def test_cleanup_temp_files(self, temp_dir):
        store = ArtifactStore(temp_dir)

        with pytest.raises(KeyboardInterrupt):
            with store.atomic_path("x.csv") as temp_path:
                assert temp_path.exists()
                raise KeyboardInterrupt

        assert not temp_path.exists()
        assert ArtifactStore.cleanup_temp_files() == 0


class TestHashChecks:
    """雜湊校驗測試類"""

    def test_mismatch_raises(self):
        with pytest.raises(SchemaMismatchError) as info:
            check_hash("config", "aaa", "bbb")

        assert info.value.expected == "aaa"
        assert info.value.actual == "bbb"
        assert info.value.exit_code == 3

    def test_missing_hash_is_accepted(self):
        check_hash("config", "aaa", None)
        check_hash("config", None, "bbb")
        check_hash("config", "aaa", "aaa")

    def test_missing_meta(self, temp_dir):
        with pytest.raises(ArtifactError):
            read_meta(temp_dir / "graph.csv")
