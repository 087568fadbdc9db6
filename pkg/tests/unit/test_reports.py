#!/usr/bin/env python3
"""
評估報表、模型比較與運行時間表的單元測試
"""

import numpy as np
import pandas as pd
import pytest

from graph_deepar.evaluation import (
    REPORT_COLUMNS,
    MetricsReport,
    MetricsRow,
    compare_models,
    group_report,
    read_report,
    render_report,
    render_runtime,
    runtime_report,
    write_report,
)
from graph_deepar.exceptions import (
    ArtifactError,
    ConfigurationError,
    DataValidationError,
    SchemaMismatchError,
)
from graph_deepar.graph import SimilarityGraph
from tests.fixtures.test_data import TestData
from tests.helpers.test_utils import TestUtils


def _test_panel():
    """3 篇文章，測試期（最後 2 週）總需求為 5、9、2"""
    demand = np.array(
        [
            [1.0, 1.0, 1.0, 1.0, 2.0, 3.0],
            [1.0, 1.0, 1.0, 1.0, 4.0, 5.0],
            [0.0, 0.0, 0.0, 0.0, 1.0, 1.0],
        ]
    )
    mask = np.ones_like(demand, dtype=bool)
    mask[2, :4] = False
    return TestUtils.make_panel(demand, mask=mask, span_start=4, article_ids=["a", "b", "c"])


def _graph(edges, n=3, ids=("a", "b", "c")):
    return SimilarityGraph(
        n_nodes=n,
        src=np.array([e[0] for e in edges], dtype=np.int64),
        dst=np.array([e[1] for e in edges], dtype=np.int64),
        scores=np.ones(len(edges)),
        threshold=0.9,
        article_ids=list(ids),
    )


def _shifted(frame: pd.DataFrame, delta: float) -> pd.DataFrame:
    shifted = frame.copy()
    shifted["mean"] = shifted["mean"] + delta
    return shifted


class TestGroupReport:
    """測試分組報表"""

    def test_groups(self):
        """測試冷啟動、連邊與前 n 分組"""
        data = _test_panel()
        perfect = TestUtils.perfect_forecast_frame(data)

        report = group_report(
            data, _graph([(0, 1)]), {"deepar": perfect}, top_n=2, min_history=3
        )

        assert report.groups["all"] == ["a", "b", "c"]
        assert report.groups["cold_start"] == ["c"]
        assert report.groups["connected"] == ["a", "b"]
        assert report.groups["top_2"] == ["b", "a"]
        assert report.group_names == ["all", "cold_start", "connected", "top_2"]
        row = report.row("all", "deepar")
        assert (row.rmse, row.mae, row.wmape, row.n_obs) == (0.0, 0.0, 0.0, 6)

    def test_top_n_ties_broken_by_article_id(self):
        demand = np.array([[2.0, 3.0], [4.0, 3.0], [1.0, 1.0]])
        data = TestUtils.make_panel(demand, span_start=1, article_ids=["z", "y", "x"])

        report = group_report(data, None, {"m": TestUtils.perfect_forecast_frame(data)}, top_n=2)

        assert report.groups["top_2"] == ["y", "z"]

    def test_top_n_larger_than_panel(self):
        data = _test_panel()

        report = group_report(data, None, {"m": TestUtils.perfect_forecast_frame(data)}, top_n=50)

        assert sorted(report.groups["top_50"]) == ["a", "b", "c"]

    def test_no_graph_omits_connected(self):
        data = _test_panel()

        report = group_report(data, None, {"m": TestUtils.perfect_forecast_frame(data)})

        assert "connected" not in report.groups
        assert "connected group omitted: no graph supplied" in report.notes

    def test_isolated_graph_gives_empty_group(self):
        data = _test_panel()

        report = group_report(data, _graph([]), {"m": TestUtils.perfect_forecast_frame(data)})

        assert report.groups["connected"] == []
        assert "group connected is empty" in report.notes
        assert report.row("connected", "m") is None

    def test_unscored_cold_start_note(self):
        """測試冷啟動文章缺少預測時在說明中列出"""
        data = _test_panel()
        perfect = TestUtils.perfect_forecast_frame(data)
        without_c = perfect[~((perfect["article_id"] == "c") & (perfect["week"] == 5))]
        without_a = perfect[~((perfect["article_id"] == "a") & (perfect["week"] == 5))]

        report = group_report(data, None, {"m": without_c, "n": without_a}, min_history=3)

        assert "m: 1 observed test cells have no forecast" in report.notes
        assert (
            "m: 1 cold-start articles lack a full context window at some origins; "
            "those weeks are not scored"
        ) in report.notes
        assert "n: 1 observed test cells have no forecast" in report.notes
        assert not any(n.startswith("n: ") and "cold-start" in n for n in report.notes)
        assert report.row("cold_start", "m").n_obs == 1

    def test_pooled_metrics(self):
        """測試多個模型的合併觀測指標"""
        data = _test_panel()
        perfect = TestUtils.perfect_forecast_frame(data)

        report = group_report(data, None, {"base": _shifted(perfect, 1.0), "graph": perfect})

        row = report.row("all", "base")
        assert row.rmse == pytest.approx(1.0)
        assert row.wmape == pytest.approx(6 / 16)
        assert report.models == ["base", "graph"]

    def test_financial_loss_and_uplift(self):
        data = _test_panel()
        perfect = TestUtils.perfect_forecast_frame(data)
        forecasts = {"base": _shifted(perfect, -1.0), "graph": _shifted(perfect, 0.5)}

        report = group_report(data, None, forecasts, costs=(2.0, 1.0))

        assert report.financial_loss["base"] == pytest.approx(12.0)
        assert report.financial_loss["graph"] == pytest.approx(3.0)
        assert report.uplift["graph"] == pytest.approx(75.0)

    def test_missing_cells_noted(self):
        data = _test_panel()
        partial = TestUtils.perfect_forecast_frame(data).iloc[1:]

        report = group_report(data, None, {"m": partial})

        assert report.row("all", "m").n_obs == 5
        assert "m: 1 observed test cells have no forecast" in report.notes

    def test_cold_start_summary(self):
        data = _test_panel()

        report = group_report(
            data, _graph([(0, 1)]), {"m": TestUtils.perfect_forecast_frame(data)}, min_history=3
        )

        assert report.summary.cold_start_share == pytest.approx(1 / 3)
        assert report.summary.cold_start_mean_neighbors == 0.0
        assert report.summary.carry_over_mean_neighbors == 1.0

    def test_invalid_inputs(self):
        data = _test_panel()
        perfect = TestUtils.perfect_forecast_frame(data)

        with pytest.raises(ConfigurationError):
            group_report(data, None, {})
        with pytest.raises(ConfigurationError):
            group_report(data, None, {"m": perfect}, top_n=0)
        with pytest.raises(DataValidationError):
            group_report(data, None, {"m": perfect}, point_column="median")
        with pytest.raises(DataValidationError):
            group_report(data, None, {"m": pd.concat([perfect, perfect])})


def _report(values: dict[str, float], group="all", config_hash="h") -> MetricsReport:
    return MetricsReport(
        dataset="d",
        rows=[
            MetricsRow(group=group, model=m, rmse=v, mae=v, wmape=v / 100, n_obs=10)
            for m, v in values.items()
        ],
        config_hash=config_hash,
    )


class TestCompareModels:
    """測試模型比較"""

    @pytest.mark.parametrize("case", TestData.RMSE_DELTA_CASES)
    def test_delta_against_baseline(self, case):
        table = compare_models(
            [_report({"deepar": case["baseline"], "graphdeepar": case["candidate"]})],
            baseline="deepar",
        )

        assert table.delta("all", "rmse", "graphdeepar") == pytest.approx(case["expected"], abs=0.01)
        assert table.delta("all", "rmse", "deepar") == 0.0

    def test_identical_reports(self):
        table = compare_models([_report({"a": 5.0}), _report({"b": 5.0})])

        assert all(r.delta_pct == 0.0 for r in table.rows)
        assert all(r.best for r in table.rows)

    def test_best_marked(self):
        table = compare_models([_report({"a": 5.0, "b": 4.0})])

        best = {r.model for r in table.rows if r.metric == "rmse" and r.best}
        assert best == {"b"}
        assert "*4.0000" in table.render()

    def test_disjoint_groups_rejected(self):
        with pytest.raises(ConfigurationError, match="share no groups"):
            compare_models([_report({"a": 5.0}, group="all"), _report({"b": 4.0}, group="top_5")])

    def test_mixed_config_hash(self):
        reports = [_report({"a": 5.0}, config_hash="h1"), _report({"b": 4.0}, config_hash="h2")]

        with pytest.raises(SchemaMismatchError):
            compare_models(reports)
        assert compare_models(reports, force=True).baseline == "a"

    def test_unknown_baseline(self):
        with pytest.raises(ConfigurationError):
            compare_models([_report({"a": 5.0})], baseline="zzz")

    def test_missing_delta_raises_key_error(self):
        table = compare_models([_report({"a": 5.0})])

        with pytest.raises(KeyError):
            table.delta("top_5", "rmse", "a")


class TestRuntimeReport:
    """測試運行時間表"""

    def test_total_difference(self):
        case = TestData.RUNTIME_CASE
        timings = {"deepar": case["deepar"], "graphdeepar": case["graphdeepar"]}

        rows = runtime_report(timings, baseline="deepar")

        assert rows[0].total_difference_pct == 0.0
        assert rows[1].total_minutes == pytest.approx(28.55)
        assert rows[1].total_difference_pct == pytest.approx(case["expected"], abs=0.01)
        assert "+160.97%" in render_runtime(rows)

    def test_faster_model_negative(self):
        rows = runtime_report(
            {
                "a": {"train_minutes": 10.0, "inference_minutes": 0.0},
                "b": {"train_minutes": 5.0, "inference_minutes": 0.0},
            }
        )

        assert rows[1].total_difference_pct == pytest.approx(-50.0)

    def test_negative_timings(self):
        with pytest.raises(DataValidationError):
            runtime_report({"a": {"train_minutes": -1.0, "inference_minutes": 0.0}})


class TestReportFiles:
    """測試報表文件"""

    def test_write_and_read(self, temp_dir):
        data = _test_panel()
        perfect = TestUtils.perfect_forecast_frame(data)
        report = group_report(data, _graph([(0, 1)]), {"m": _shifted(perfect, 1.0)})
        path = temp_dir / "metrics.csv"

        write_report(report, path)
        loaded = read_report(path, config_hash="h")

        assert path.read_text().splitlines()[0] == ",".join(REPORT_COLUMNS)
        assert [(r.group, r.model, r.n_obs) for r in loaded.rows] == [
            (r.group, r.model, r.n_obs) for r in report.rows
        ]
        for got, expected in zip(loaded.rows, report.rows, strict=True):
            assert got.rmse == pytest.approx(expected.rmse, rel=1e-9)
            assert got.wmape == pytest.approx(expected.wmape, rel=1e-9)
        assert loaded.dataset == "fixture"
        assert loaded.config_hash == "h"

    def test_deterministic_bytes(self, temp_dir):
        data = _test_panel()
        frame = _shifted(TestUtils.perfect_forecast_frame(data), 0.3)

        write_report(group_report(data, None, {"m": frame}), temp_dir / "a.csv")
        write_report(group_report(data, None, {"m": frame}), temp_dir / "b.csv")

        assert (temp_dir / "a.csv").read_bytes() == (temp_dir / "b.csv").read_bytes()

    def test_missing_file(self, temp_dir):
        with pytest.raises(ArtifactError):
            read_report(temp_dir / "absent.csv")

    def test_bad_header(self, temp_dir):
        path = temp_dir / "bad.csv"
        path.write_text("a,b\n1,2\n")

        with pytest.raises(ArtifactError):
            read_report(path)

    def test_render(self):
        data = _test_panel()

        text = render_report(group_report(data, None, {"m": TestUtils.perfect_forecast_frame(data)}))

        assert text.startswith("dataset: fixture")
        assert "note: connected group omitted: no graph supplied" in text
