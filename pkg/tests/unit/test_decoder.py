#!/usr/bin/env python3
"""
自回歸解碼器的單元測試
"""

import numpy as np
import pytest
import torch

from graph_deepar.exceptions import ConfigurationError, DataValidationError, ShapeMismatchError
from graph_deepar.models import (
    DecoderConfig,
    DeepARDecoder,
    InputLayout,
    build_decoder_inputs,
    decoder_forward,
    step_embeddings,
)
from tests.helpers.test_utils import TestUtils


CONFIG = DecoderConfig(hidden_sizes=(6, 5), dropout=0.0, context_length=3, horizon=2)


def _panel():
    demand = np.array([[float(10 * i + w) for w in range(10)] for i in range(3)])
    return TestUtils.make_panel(demand)


def _decoder(config=CONFIG, embedding_dim=0, static_dim=3) -> DeepARDecoder:
    layout = InputLayout(embedding_dim=embedding_dim, static_dim=static_dim, dynamic_dim=4)
    return DeepARDecoder(config, layout).double()


class TestDecoderInputs:
    """測試解碼器輸入對齊"""

    def test_lag_and_target_alignment(self):
        """測試步驟 j 的滯後週 t−P+1+j 與目標週 t−P+2+j"""
        data = _panel()

        inputs = build_decoder_inputs(
            data, np.array([1]), np.array([5]), CONFIG, dtype=torch.float64
        )

        assert inputs.lags.tolist() == [[13.0, 14.0, 15.0, 16.0]]
        assert inputs.targets.tolist() == [[14.0, 15.0, 16.0, 17.0]]
        assert float(inputs.scale[0]) == pytest.approx(1.0 + 14.0)
        np.testing.assert_allclose(
            inputs.dynamic[0].numpy(), data.dynamic_features[1][:, 4:8].T
        )

    def test_forecast_inputs_hide_future(self):
        """測試不帶目標時只讀取錨點以前的需求"""
        data = _panel()

        inputs = build_decoder_inputs(
            data, np.array([0, 2]), np.array([5, 5]), CONFIG, with_targets=False
        )

        assert inputs.targets is None
        assert inputs.lags.tolist() == [[3.0, 4.0, 5.0, 0.0], [23.0, 24.0, 25.0, 0.0]]

    def test_no_scaling(self):
        config = DecoderConfig(hidden_sizes=(4,), context_length=3, horizon=2, target_scaling="none")

        inputs = build_decoder_inputs(_panel(), np.array([2]), np.array([5]), config)

        assert inputs.scale.tolist() == [1.0]

    def test_step_embeddings(self):
        """測試預測步驟重複使用最後一列嵌入"""
        embeddings = torch.arange(6.0).reshape(1, 3, 2)

        expanded = step_embeddings(embeddings, 5)

        assert expanded.shape == (1, 5, 2)
        torch.testing.assert_close(expanded[0, 3], embeddings[0, 2])
        torch.testing.assert_close(expanded[0, 4], embeddings[0, 2])
        torch.testing.assert_close(expanded[0, :3], embeddings[0])


class TestDecoderForward:
    """測試教師強制前向"""

    def test_shapes_and_constraints(self):
        data = _panel()
        decoder = _decoder()
        inputs = build_decoder_inputs(
            data, np.array([0, 1, 2]), np.array([4, 5, 6]), CONFIG, dtype=torch.float64
        )

        params = decoder_forward(decoder, inputs)

        assert params.loc.shape == (3, CONFIG.n_steps)
        assert bool(torch.all(params.scale > 0))
        assert bool(torch.all(params.dof > 2))

    def test_fixed_dof(self):
        config = DecoderConfig(hidden_sizes=(4,), context_length=3, horizon=2, fixed_dof=5.0)
        decoder = _decoder(config)
        inputs = build_decoder_inputs(
            _panel(), np.array([0]), np.array([5]), config, dtype=torch.float64
        )

        params = decoder_forward(decoder, inputs)

        assert torch.all(params.dof == 5.0)

    def test_causal_in_time(self):
        """測試第 j 步的參數不受之後步驟輸入影響"""
        data = _panel()
        decoder = _decoder()
        inputs = build_decoder_inputs(
            data, np.array([0]), np.array([5]), CONFIG, dtype=torch.float64
        )
        base = decoder_forward(decoder, inputs)

        inputs.lags[0, 3] = 1000.0
        changed = decoder_forward(decoder, inputs)

        torch.testing.assert_close(changed.loc[:, :3], base.loc[:, :3])
        assert not torch.allclose(changed.loc[:, 3], base.loc[:, 3])

    def test_graph_layout_requires_embeddings(self):
        decoder = _decoder(embedding_dim=2)
        inputs = build_decoder_inputs(
            _panel(), np.array([0]), np.array([5]), CONFIG, dtype=torch.float64
        )

        with pytest.raises(ShapeMismatchError):
            decoder_forward(decoder, inputs)

        params = decoder_forward(decoder, inputs, torch.zeros(1, 3, 2, dtype=torch.float64))
        assert params.loc.shape == (1, 4)

    def test_non_finite_inputs(self):
        decoder = _decoder()
        inputs = build_decoder_inputs(
            _panel(), np.array([0]), np.array([5]), CONFIG, dtype=torch.float64
        )
        inputs.static[0, 0] = float("nan")

        with pytest.raises(DataValidationError, match="static"):
            decoder_forward(decoder, inputs)

    def test_training_flag_restored(self):
        decoder = _decoder()
        decoder.eval()
        inputs = build_decoder_inputs(
            _panel(), np.array([0]), np.array([5]), CONFIG, dtype=torch.float64
        )

        decoder_forward(decoder, inputs, training=True)

        assert not decoder.training

    @pytest.mark.parametrize("seed", range(5))
    def test_gradcheck(self, seed):
        """測試對輸入滯後與參數頭權重的梯度"""
        torch.manual_seed(seed)
        config = DecoderConfig(hidden_sizes=(3,), dropout=0.0, context_length=3, horizon=2)
        decoder = _decoder(config)
        inputs = build_decoder_inputs(
            _panel(), np.array([0, 1]), np.array([4, 6]), config, dtype=torch.float64
        )
        lags = inputs.lags.clone().requires_grad_(True)

        def nll(lags, head_weight):
            x = decoder.step_inputs(lags, inputs.scale, inputs.static, inputs.dynamic, None)
            h, _ = decoder.rnn[0](x)
            raw = torch.nn.functional.linear(h, head_weight, decoder.head.bias)
            params = decoder.distribution(raw, inputs.scale)
            return -params.distribution().log_prob(inputs.targets).mean()

        head_weight = decoder.head.weight.detach().clone().requires_grad_(True)
        assert torch.autograd.gradcheck(nll, (lags, head_weight), atol=1e-6, rtol=1e-4)


class TestDecoderConfig:
    """測試解碼器配置驗證"""

    def test_invalid_values(self):
        with pytest.raises(ConfigurationError):
            DecoderConfig(cell="gru")
        with pytest.raises(ConfigurationError):
            DecoderConfig(horizon=0)
        with pytest.raises(ConfigurationError):
            DecoderConfig(fixed_dof=2.0)

    def test_round_trip(self):
        assert DecoderConfig.from_dict(CONFIG.to_dict()) == CONFIG

    def test_steps(self):
        assert DecoderConfig(context_length=10, horizon=4).n_steps == 13


class TestInputLayout:
    """測試輸入通道佈局"""

    def test_channel_order(self):
        layout = InputLayout(embedding_dim=8, static_dim=3, dynamic_dim=4)

        assert layout.width == 16
        assert layout.slices() == {
            "lag": slice(0, 1),
            "embedding": slice(1, 9),
            "static": slice(9, 12),
            "dynamic": slice(12, 16),
        }

    def test_baseline_layout_has_no_embedding(self):
        layout = InputLayout(embedding_dim=0, static_dim=3, dynamic_dim=4)

        embedding = layout.slices()["embedding"]
        assert embedding.stop - embedding.start == 0


def _copy_shared_channels(baseline: DeepARDecoder, graph: DeepARDecoder) -> None:
    """把基線權重複製到圖解碼器；嵌入通道的輸入權重保持隨機"""
    source = baseline.state_dict()
    target = graph.state_dict()
    base_slices = baseline.layout.slices()
    graph_slices = graph.layout.slices()
    for name, value in source.items():
        if name != "rnn.0.weight_ih_l0":
            target[name] = value.clone()
            continue
        weight = target[name].clone()
        for channel in ("lag", "static", "dynamic"):
            weight[:, graph_slices[channel]] = value[:, base_slices[channel]]
        target[name] = weight
    graph.load_state_dict(target)


class TestDecoderOracles:
    """測試解碼器的手算對照"""

    @pytest.mark.parametrize("seed", range(3))
    def test_zero_embeddings_match_baseline(self, seed):
        """測試全零嵌入的圖解碼器與共享通道權重相同的基線一致"""
        torch.manual_seed(seed)
        baseline = _decoder()
        graph = _decoder(embedding_dim=3)
        _copy_shared_channels(baseline, graph)
        inputs = build_decoder_inputs(
            _panel(), np.array([0, 1, 2]), np.array([4, 5, 6]), CONFIG, dtype=torch.float64
        )

        expected = decoder_forward(baseline, inputs)
        actual = decoder_forward(
            graph, inputs, torch.zeros(3, CONFIG.context_length, 3, dtype=torch.float64)
        )

        torch.testing.assert_close(actual.loc, expected.loc)
        torch.testing.assert_close(actual.scale, expected.scale)
        torch.testing.assert_close(actual.dof, expected.dof)

    def test_zero_weights_give_constant_output(self):
        """測試遞迴層與參數頭權重全零時，每步輸出只由頭偏置決定"""
        config = DecoderConfig(
            hidden_sizes=(4,), dropout=0.0, context_length=3, horizon=2, target_scaling="none"
        )
        decoder = _decoder(config)
        with torch.no_grad():
            for parameter in decoder.parameters():
                parameter.zero_()
            decoder.head.bias.copy_(torch.tensor([1.5, 0.3, -0.7], dtype=torch.float64))
        inputs = build_decoder_inputs(
            _panel(), np.array([0, 2]), np.array([4, 6]), config, dtype=torch.float64
        )

        params = decoder_forward(decoder, inputs)

        softplus = torch.nn.functional.softplus
        expected_scale = float(softplus(torch.tensor(0.3, dtype=torch.float64))) + 1e-6
        expected_dof = 2.0 + float(softplus(torch.tensor(-0.7, dtype=torch.float64))) + 1e-6
        assert torch.allclose(params.loc, torch.full_like(params.loc, 1.5))
        assert torch.allclose(params.scale, torch.full_like(params.scale, expected_scale))
        assert torch.allclose(params.dof, torch.full_like(params.dof, expected_dof))

    def test_one_unit_lstm_matches_cell_equations(self):
        """測試單元 LSTM 的 μ 與逐步手算的門方程一致"""
        torch.manual_seed(7)
        config = DecoderConfig(hidden_sizes=(1,), dropout=0.0, context_length=2, horizon=1)
        decoder = _decoder(config)
        inputs = build_decoder_inputs(
            _panel(), np.array([1]), np.array([5]), config, dtype=torch.float64
        )

        params = decoder_forward(decoder, inputs)

        lstm = decoder.rnn[0]
        w_ih = lstm.weight_ih_l0.detach()
        w_hh = lstm.weight_hh_l0.detach()
        bias = (lstm.bias_ih_l0 + lstm.bias_hh_l0).detach()
        x = decoder.step_inputs(inputs.lags, inputs.scale, inputs.static, inputs.dynamic, None)[0]
        scale = float(inputs.scale[0])
        h = torch.zeros(1, dtype=torch.float64)
        c = torch.zeros(1, dtype=torch.float64)
        expected = []
        for step in range(config.n_steps):
            gates = w_ih @ x[step] + w_hh @ h + bias
            i, f, g, o = gates[0], gates[1], gates[2], gates[3]
            c = torch.sigmoid(f) * c + torch.sigmoid(i) * torch.tanh(g)
            h = torch.sigmoid(o) * torch.tanh(c)
            raw = decoder.head.weight.detach()[0] @ h + decoder.head.bias.detach()[0]
            expected.append(float(raw) * scale)

        np.testing.assert_allclose(params.loc[0].detach().numpy(), expected, rtol=1e-10)
