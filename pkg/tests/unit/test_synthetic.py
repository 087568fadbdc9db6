#!/usr/bin/env python3
"""
合成面板生成器的單元測試
"""

import numpy as np
import pytest

from graph_deepar.data import (
    FeatureSchema,
    SyntheticSpec,
    generate_synthetic_panel,
    load_panel,
    write_synthetic_panel,
)
from graph_deepar.exceptions import ConfigurationError
from graph_deepar.graph import graph_from_features


class TestSyntheticPanel:
    """測試合成面板"""

    def test_default_shape_and_labels(self):
        data, labels = generate_synthetic_panel(SyntheticSpec())

        assert data.demand.shape == (60, 80)
        assert data.static_features.shape == (60, 12)
        assert labels.tolist() == [i % 12 for i in range(60)]
        assert data.article_ids[0] == "A0000"
        assert data.availability_mask.all()
        assert np.all(data.demand > 0)

    def test_deterministic_per_seed(self):
        first, _ = generate_synthetic_panel(SyntheticSpec(seed=11))
        second, _ = generate_synthetic_panel(SyntheticSpec(seed=11))
        other, _ = generate_synthetic_panel(SyntheticSpec(seed=12))

        np.testing.assert_array_equal(first.demand, second.demand)
        assert not np.allclose(first.demand, other.demand)

    def test_clusters_form_graph_components(self):
        """測試相似度圖只連接同集群文章"""
        data, labels = generate_synthetic_panel(SyntheticSpec())

        graph = graph_from_features(data.static_features, threshold=0.95)

        assert graph.n_edges == 12 * 10
        assert np.all(labels[graph.src] == labels[graph.dst])
        assert np.all(graph.degree == 4)

    def test_within_cluster_correlation_dominates(self):
        """測試同集群需求相關性高於跨集群"""
        data, labels = generate_synthetic_panel(
            SyntheticSpec(n_articles=60, n_clusters=12, T=80, seed=7)
        )

        corr = np.corrcoef(data.demand)
        same = labels[:, None] == labels[None, :]
        off_diagonal = ~np.eye(60, dtype=bool)

        within = corr[same & off_diagonal].mean()
        across = corr[~same].mean()
        assert within > across

    def test_cross_cluster_features_dissimilar(self):
        data, labels = generate_synthetic_panel(SyntheticSpec())

        x = data.static_features
        unit = x / np.linalg.norm(x, axis=1, keepdims=True)
        cosine = unit @ unit.T
        same = labels[:, None] == labels[None, :]

        assert cosine[~same].max() < 0.5

    def test_cold_starts(self):
        """測試冷啟動文章在上架前無觀測"""
        data, _ = generate_synthetic_panel(SyntheticSpec(cold_start_fraction=0.25))

        late = ~data.availability_mask[:, :60].any(axis=1)
        assert int(late.sum()) == 15
        assert data.availability_mask[:, -1].all()

    def test_invalid_spec(self):
        with pytest.raises(ConfigurationError):
            SyntheticSpec(n_articles=4, n_clusters=5)
        with pytest.raises(ConfigurationError):
            SyntheticSpec(cold_start_fraction=1.0)

    def test_written_files_reload(self, temp_dir):
        """測試寫出的文件可由面板讀取器重建"""
        spec = SyntheticSpec(n_articles=12, n_clusters=3, T=20, seed=5)
        data, _ = generate_synthetic_panel(spec)

        paths = write_synthetic_panel(spec, temp_dir)
        schema = FeatureSchema.from_config(
            [{"name": f"attr_{k:02d}", "kind": "numeric"} for k in range(3)]
        )
        loaded = load_panel(paths["demand"], paths["static"], schema)

        assert set(paths) == {"demand", "static", "schema", "clusters"}
        assert loaded.article_ids == data.article_ids
        np.testing.assert_allclose(loaded.demand, data.demand, rtol=1e-12)
        np.testing.assert_allclose(loaded.static_features, data.static_features, atol=1e-8)
