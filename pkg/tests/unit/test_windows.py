#!/usr/bin/env python3
"""
滑動窗口枚舉的單元測試
"""

import numpy as np
import pytest

from graph_deepar.data import make_windows, rolling_origins
from graph_deepar.debug import DataQualityWarning
from graph_deepar.exceptions import ConfigurationError
from tests.helpers.test_utils import TestUtils


class TestMakeWindows:
    """測試窗口枚舉"""

    def test_full_panel_ordering(self):
        """測試完整面板的窗口數量與 (錨點, 文章) 排序"""
        data = TestUtils.make_panel(np.ones((2, 10)))

        windows = make_windows(data, P=3, K=2)

        assert len(windows) == 12
        assert windows.anchor.tolist() == [a for a in range(2, 8) for _ in range(2)]
        assert windows.article_index.tolist() == [0, 1] * 6
        assert windows.anchors().tolist() == list(range(2, 8))

    def test_missing_week_excludes_overlapping_windows(self):
        """測試缺失週排除所有覆蓋它的窗口"""
        mask = np.ones((2, 10), dtype=bool)
        mask[1, 5] = False
        data = TestUtils.make_panel(np.ones((2, 10)), mask=mask)

        windows = make_windows(data, P=3, K=2)

        assert len(windows) == 7
        assert windows.anchor[windows.article_index == 1].tolist() == [2]
        for article, context, horizon in windows.entries:
            weeks = list(context) + list(horizon)
            assert data.availability_mask[article, weeks].all()

    def test_ranges(self):
        data = TestUtils.make_panel(np.ones((1, 10)))
        windows = make_windows(data, P=3, K=2)

        assert windows.context_range(4) == range(2, 5)
        assert windows.horizon_range(4) == range(5, 7)

    def test_span_start_limits_anchors(self):
        """測試評估切分只產生預測區間落在擁有週內的窗口"""
        data = TestUtils.make_panel(np.ones((1, 10)), span_start=6)

        windows = make_windows(data, P=3, K=2)

        assert windows.anchor.tolist() == [5, 6, 7]
        assert all(h.start >= 6 for _, _, h in windows.entries)

    def test_forecast_origins_use_future_steps(self):
        """測試不要求預測區間時可延伸至已知未來週"""
        data = TestUtils.make_panel(np.ones((1, 10)), future_steps=2)

        windows = make_windows(data, P=3, K=2, require_horizon=False)

        assert windows.anchor.max() == 9

    def test_requested_anchors(self):
        data = TestUtils.make_panel(np.ones((2, 10)))

        windows = make_windows(data, P=3, K=2, anchors=[4, 100])

        assert windows.anchor.tolist() == [4, 4]

    def test_extra_history(self):
        data = TestUtils.make_panel(np.ones((1, 10)))

        windows = make_windows(data, P=3, K=2, extra_history=2)

        assert windows.anchor.min() == 4

    def test_empty_warns(self):
        """測試時間線短於窗口時警告"""
        data = TestUtils.make_panel(np.ones((2, 4)))

        with pytest.warns(DataQualityWarning, match="no valid windows"):
            windows = make_windows(data, P=3, K=2)

        assert len(windows) == 0

    def test_invalid_shape(self):
        data = TestUtils.make_panel(np.ones((1, 10)))

        with pytest.raises(ConfigurationError):
            make_windows(data, P=0, K=2)

    def test_subset(self):
        data = TestUtils.make_panel(np.ones((2, 10)))
        windows = make_windows(data, P=3, K=2)

        subset = windows.subset(np.array([0, 3]))

        assert subset.article_index.tolist() == [0, 1]
        assert subset.anchor.tolist() == [2, 3]

    @pytest.mark.parametrize("seed", range(5))
    def test_count_matches_full_scan(self, seed):
        """測試窗口數等於逐一掃描 (文章, 錨點) 的計數"""
        rng = np.random.default_rng(seed)
        mask = rng.random((4, 30)) < 0.85
        data = TestUtils.make_panel(np.ones((4, 30)), mask=mask, span_start=3)
        P, K = 3, 2

        windows = make_windows(data, P=P, K=K)

        expected = [
            (anchor, article)
            for anchor in range(max(P - 1, data.span_start - 1), 30 - K)
            for article in range(4)
            if mask[article, anchor - P + 1 : anchor + K + 1].all()
        ]
        assert len(windows) == len(expected)
        assert list(zip(windows.anchor.tolist(), windows.article_index.tolist())) == expected


class TestRollingOrigins:
    """測試評估切分的滾動起點"""

    def test_aligned_span(self):
        assert rolling_origins(span_start=10, n_weeks=18, horizon=4) == [9, 13]

    def test_unaligned_span_adds_last_origin(self):
        """測試 26 週評估、K=4 時最後兩週也有起點覆蓋"""
        origins = rolling_origins(span_start=40, n_weeks=66, horizon=4)

        assert origins[:-1] == list(range(39, 61, 4))
        assert origins[-1] == 61
        covered = {anchor + k for anchor in origins for k in range(1, 5)}
        assert covered == set(range(40, 66))

    def test_span_shorter_than_horizon(self):
        with pytest.raises(ConfigurationError):
            rolling_origins(span_start=10, n_weeks=12, horizon=4)
        with pytest.raises(ConfigurationError):
            rolling_origins(span_start=10, n_weeks=20, horizon=0)
