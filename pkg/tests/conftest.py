#!/usr/bin/env python3
"""
測試配置和共用 fixtures
"""

import os
import shutil
import tempfile
from collections.abc import Generator
from pathlib import Path

import numpy as np
import pytest
import torch

from graph_deepar.data import PanelDataset, SyntheticSpec, generate_synthetic_panel
from graph_deepar.debug import DEBUG_ENV_VAR, set_debug_mode
from graph_deepar.models import DecoderConfig


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """創建臨時目錄 fixture"""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def small_spec() -> SyntheticSpec:
    """12 篇文章、3 個集群、40 週的小型合成面板設定"""
    return SyntheticSpec(n_articles=12, n_clusters=3, T=40, seed=3)


@pytest.fixture
def small_panel(small_spec: SyntheticSpec) -> PanelDataset:
    data, _ = generate_synthetic_panel(small_spec)
    return data


@pytest.fixture
def small_labels(small_spec: SyntheticSpec) -> np.ndarray:
    _, labels = generate_synthetic_panel(small_spec)
    return labels


@pytest.fixture
def tiny_decoder() -> DecoderConfig:
    """快速測試用的小解碼器"""
    return DecoderConfig(hidden_sizes=(8,), dropout=0.0, context_length=4, horizon=2)


@pytest.fixture(autouse=True)
def setup_test_env() -> Generator[None, None, None]:
    """自動設置測試環境"""
    original_debug = os.environ.get(DEBUG_ENV_VAR)
    set_debug_mode(True)
    torch.manual_seed(0)

    yield

    if original_debug is not None:
        os.environ[DEBUG_ENV_VAR] = original_debug
    else:
        os.environ.pop(DEBUG_ENV_VAR, None)
