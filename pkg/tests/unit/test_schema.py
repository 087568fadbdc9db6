#!/usr/bin/env python3
"""
靜態特徵 schema 與編碼器的單元測試
"""

import numpy as np
import pandas as pd
import pytest

from graph_deepar.data import FeatureSchema, StaticFeatureEncoder, encode_static_features
from graph_deepar.debug import DataQualityWarning
from graph_deepar.exceptions import ConfigurationError, DataValidationError
from tests.fixtures.test_data import TestData


@pytest.fixture
def raw():
    return pd.DataFrame(TestData.STATIC_ROWS)


@pytest.fixture
def schema():
    return FeatureSchema.from_config(TestData.SCHEMA)


class TestFeatureSchema:
    """測試 schema 解析"""

    def test_mapping_form(self):
        schema = FeatureSchema.from_config({"color": "categorical", "price": "numeric"})

        assert schema.names == ["color", "price"]

    def test_duplicate_names(self):
        with pytest.raises(ConfigurationError):
            FeatureSchema.from_config([
                {"name": "a", "kind": "numeric"},
                {"name": "a", "kind": "categorical"},
            ])

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            FeatureSchema.from_config({"a": "text"})

    def test_empty_schema(self):
        with pytest.raises(ConfigurationError):
            FeatureSchema.from_config([])


class TestStaticFeatureEncoder:
    """測試靜態特徵編碼"""

    def test_frozen_encoder_maps_unseen_to_zeros(self, raw, schema):
        """測試未知類別映射為零並發出警告"""
        encoder = StaticFeatureEncoder(schema).fit(raw)
        unseen = pd.DataFrame([{"article_id": "x", "color": "green", "price": 20.0}])

        with pytest.warns(DataQualityWarning, match="unseen"):
            x = encoder.transform(unseen)

        np.testing.assert_allclose(x, [[0.0, 0.0, 0.5]])
        assert encoder.last_summary.unseen_counts == {"color": 1}

    def test_numeric_values_clipped(self, raw, schema):
        """測試超出擬合範圍的數值被截斷到 [0, 1]"""
        encoder = StaticFeatureEncoder(schema).fit(raw)
        outside = pd.DataFrame(
            [{"color": "red", "price": 40.0}, {"color": "blue", "price": 0.0}]
        )

        x = encoder.transform(outside)

        assert x[0, 2] == 1.0
        assert x[1, 2] == 0.0

    def test_declared_vocabulary_order(self, raw):
        """測試 schema 宣告的詞彙順序"""
        schema = FeatureSchema.from_config(
            [{"name": "color", "kind": "categorical", "vocabulary": ["red", "blue"]}]
        )

        x = encode_static_features(raw, schema)

        np.testing.assert_allclose(x, [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])

    def test_schema_hash_tracks_fit(self, raw, schema):
        """測試相同擬合得到相同雜湊，不同詞彙得到不同雜湊"""
        first = StaticFeatureEncoder(schema).fit(raw).schema_hash
        second = StaticFeatureEncoder(schema).fit(raw.copy()).schema_hash
        third = StaticFeatureEncoder(schema).fit(raw.iloc[:2]).schema_hash

        assert first == second
        assert first != third

    def test_missing_column(self, raw, schema):
        with pytest.raises(DataValidationError, match="missing columns"):
            StaticFeatureEncoder(schema).fit(raw.drop(columns=["price"]))

    def test_transform_before_fit(self, raw, schema):
        with pytest.raises(ConfigurationError):
            StaticFeatureEncoder(schema).transform(raw)

    def test_non_numeric_value(self, schema):
        bad = pd.DataFrame([{"color": "red", "price": "cheap"}])

        with pytest.raises(DataValidationError):
            StaticFeatureEncoder(schema).fit(bad)
