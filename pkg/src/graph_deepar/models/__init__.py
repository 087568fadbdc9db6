"""
模型模組
========

GNN 編碼器、自回歸 Student-t 解碼器、似然函數與取樣預測。
"""

from .decoder import (
    DecoderConfig,
    DecoderInputs,
    DeepARDecoder,
    InputLayout,
    build_decoder_inputs,
    decoder_forward,
    step_embeddings,
)
from .encoder import (
    EmbeddingSequence,
    EncoderConfig,
    GNNLayer,
    GraphEncoder,
    MessageIndex,
    encode_window,
    gnn_layer,
)
from .forecaster import (
    DEFAULT_QUANTILES,
    ForecastPaths,
    GraphDeepAR,
    forecast_frame,
    forecast_quantiles,
    keep_latest_origin,
    point_forecast,
    sample_forecast,
    sample_frame,
)
from .likelihood import TStudentParams, asymmetric_t_nll, sample_student_t, t_nll


__all__ = [
    "DEFAULT_QUANTILES",
    "DecoderConfig",
    "DecoderInputs",
    "DeepARDecoder",
    "EmbeddingSequence",
    "EncoderConfig",
    "ForecastPaths",
    "GNNLayer",
    "GraphDeepAR",
    "GraphEncoder",
    "InputLayout",
    "MessageIndex",
    "TStudentParams",
    "asymmetric_t_nll",
    "build_decoder_inputs",
    "decoder_forward",
    "encode_window",
    "forecast_frame",
    "forecast_quantiles",
    "gnn_layer",
    "keep_latest_origin",
    "point_forecast",
    "sample_forecast",
    "sample_frame",
    "sample_student_t",
    "step_embeddings",
    "t_nll",
]
