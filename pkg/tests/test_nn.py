"""Tests for the neural substrate: layers, losses, Adam, gradient checks and the trainer."""

import math

import numpy as np
import pytest

from app.exceptions import DimensionError, NumericError
from app.nn import (
    AdamState,
    DenseLayer,
    LstmCell,
    MinibatchTrainer,
    adam_step,
    binary_cross_entropy,
    dense_forward,
    gradient_check,
    load_checkpoint,
    lstm_step,
    mean_squared_error,
    save_checkpoint,
)
from app.nn.losses import BCE_EPSILON


class TestDenseLayer:
    def test_identity_linear(self):
        layer = DenseLayer(np.eye(3), np.zeros(3), "linear")
        x = np.array([0.5, -1.0, 2.0])
        y, _ = dense_forward(layer, x)
        np.testing.assert_array_equal(y, x)

    def test_sigmoid_at_zero(self):
        layer = DenseLayer(np.zeros((4, 2)), np.zeros(4), "sigmoid")
        y, _ = layer.forward(np.array([3.0, -7.0]))
        np.testing.assert_allclose(y, 0.5)

    def test_equal_rows_give_equal_outputs(self, rng):
        layer = DenseLayer.initialize(3, 5, "tanh", rng)
        row = rng.normal(size=3)
        y, _ = layer.forward(np.stack([row, row]))
        np.testing.assert_array_equal(y[0], y[1])

    def test_wrong_input_dim(self, rng):
        layer = DenseLayer.initialize(3, 2, "tanh", rng)
        with pytest.raises(DimensionError):
            layer.forward(np.zeros(4))


class TestLstm:
    def test_zero_parameters_fixed_point(self):
        cell = LstmCell(np.zeros((8, 3)), np.zeros((8, 2)), np.zeros(8))
        h, c = lstm_step(cell, np.array([1.0, -2.0, 3.0]), np.zeros(2), np.zeros(2))
        np.testing.assert_array_equal(h, 0.0)
        np.testing.assert_array_equal(c, 0.0)

    def test_hidden_state_bounded(self, rng):
        cell = LstmCell.initialize(4, 6, rng)
        h, c = cell.zero_state()
        for _ in range(20):
            h, c = lstm_step(cell, rng.normal(scale=10.0, size=4), h, c)
            assert np.all(np.abs(h) < 1.0)

    def test_pure(self, rng):
        cell = LstmCell.initialize(3, 2, rng)
        x, h0, c0 = rng.normal(size=3), rng.normal(size=2), rng.normal(size=2)
        first = lstm_step(cell, x, h0, c0)
        second = lstm_step(cell, x, h0, c0)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])

    def test_state_mismatch(self, rng):
        cell = LstmCell.initialize(3, 2, rng)
        with pytest.raises(DimensionError):
            lstm_step(cell, np.zeros(3), np.zeros(3), np.zeros(3))


class TestLosses:
    def test_bce_perfect_prediction(self):
        loss, _ = binary_cross_entropy(np.array([1.0, 0.0]), np.array([1 - BCE_EPSILON, BCE_EPSILON]))
        assert loss == pytest.approx(0.0, abs=1e-6)

    def test_bce_half_probabilities(self):
        loss, _ = binary_cross_entropy(np.array([1.0, 0.0, 0.0, 1.0]), np.full(4, 0.5))
        assert loss == pytest.approx(4 * math.log(2), abs=1e-12)

    def test_bce_gradient(self):
        _, grad = binary_cross_entropy(np.array([1.0]), np.array([0.5]))
        assert grad[0] == pytest.approx(-2.0)

    def test_bce_length_mismatch(self):
        with pytest.raises(DimensionError):
            binary_cross_entropy(np.ones(3), np.full(2, 0.5))

    def test_mse_values(self):
        assert mean_squared_error(np.ones((2, 2)), np.ones((2, 2)))[0] == 0.0
        assert mean_squared_error(np.zeros(2), np.ones(2))[0] == pytest.approx(1.0)

    def test_mse_homogeneity(self, rng):
        x, xhat = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
        base, _ = mean_squared_error(x, xhat)
        scaled, _ = mean_squared_error(3.0 * x, 3.0 * xhat)
        assert scaled == pytest.approx(9.0 * base)


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        params = {"w": np.array([1.0, -2.0])}
        state = AdamState.for_params(params)
        updated, new_state = adam_step(state, params, {"w": np.zeros(2)})
        np.testing.assert_array_equal(updated["w"], params["w"])
        assert new_state.step == 1

    def test_first_step_is_learning_rate(self):
        params = {"w": np.array([0.0])}
        state = AdamState.for_params(params, learning_rate=1e-3)
        updated, _ = adam_step(state, params, {"w": np.array([0.5])})
        assert updated["w"][0] == pytest.approx(-1e-3, rel=1e-5)

    def test_pure(self):
        params = {"w": np.array([0.3, 0.1])}
        grads = {"w": np.array([0.2, -0.4])}
        state = AdamState.for_params(params)
        a, state_a = adam_step(state, params, grads)
        b, state_b = adam_step(state, params, grads)
        np.testing.assert_array_equal(a["w"], b["w"])
        assert state.step == 0
        assert state_a.step == state_b.step == 1
        np.testing.assert_array_equal(params["w"], [0.3, 0.1])

    def test_non_finite_gradient_names_parameter(self):
        params = {"bias": np.zeros(2)}
        state = AdamState.for_params(params)
        with pytest.raises(NumericError, match="bias"):
            adam_step(state, params, {"bias": np.array([np.nan, 0.0])})


def _dense_mse_fn(layers, x, target):
    def fn(params):
        h = x
        caches = []
        for i, layer in enumerate(layers):
            layer.weights, layer.bias = params[f"{i}.weights"], params[f"{i}.bias"]
            h, cache = layer.forward(h)
            caches.append(cache)
        loss, dh = mean_squared_error(target, h)
        grads = {}
        for i in reversed(range(len(layers))):
            dh, g = layers[i].backward(caches[i], dh)
            grads[f"{i}.weights"], grads[f"{i}.bias"] = g["weights"], g["bias"]
        return loss, grads
    return fn


class TestGradientCheck:
    def test_dense_mse(self, rng):
        layers = [DenseLayer.initialize(4, 5, "tanh", rng), DenseLayer.initialize(5, 3, "linear", rng)]
        params = {}
        for i, layer in enumerate(layers):
            params[f"{i}.weights"], params[f"{i}.bias"] = layer.weights.copy(), rng.normal(size=layer.output_dim)
        x, target = rng.normal(size=(6, 4)), rng.normal(size=(6, 3))
        assert gradient_check(_dense_mse_fn(layers, x, target), params) < 1e-4

    def test_lstm_with_bce_head(self, rng):
        cell = LstmCell.initialize(3, 4, rng)
        head = DenseLayer.initialize(4, 2, "sigmoid", rng)
        xs = rng.normal(size=(2, 3, 3))
        y = np.array([[1.0, 0.0], [0.0, 1.0]])

        def fn(params):
            cell.input_weights = params["input_weights"]
            cell.recurrent_weights = params["recurrent_weights"]
            cell.bias = params["bias"]
            head.weights, head.bias = params["head.weights"], params["head.bias"]
            _, h, _, caches = cell.forward_sequence(xs)
            yhat, head_cache = head.forward(h)
            loss, dy = binary_cross_entropy(y, yhat)
            dh, head_grads = head.backward(head_cache, dy)
            _, _, _, grads = cell.backward_sequence(caches, None, dh_last=dh)
            grads["head.weights"], grads["head.bias"] = head_grads["weights"], head_grads["bias"]
            return loss, grads

        params = {name: value.copy() for name, value in cell.parameters().items()}
        params["bias"] = rng.normal(scale=0.5, size=params["bias"].shape)
        params["head.weights"], params["head.bias"] = head.weights.copy(), head.bias.copy()
        assert gradient_check(fn, params) < 1e-4

    def test_parameterless_model(self):
        assert gradient_check(lambda params: (1.0, {}), {}) == 0.0

    def test_non_finite_loss(self):
        with pytest.raises(NumericError):
            gradient_check(lambda params: (float("nan"), {}), {"w": np.zeros(1)})


class _Quadratic:
    """Tiny trainable: loss = mean((a*x + b - y)^2)."""

    def __init__(self):
        self.params = {"a": np.array([0.0]), "b": np.array([0.0])}

    def get_parameters(self):
        return {k: v.copy() for k, v in self.params.items()}

    def set_parameters(self, params):
        self.params = {k: np.array(v) for k, v in params.items()}

    def loss_and_grads(self, inputs, targets):
        pred = self.params["a"][0] * inputs + self.params["b"][0]
        loss, d = mean_squared_error(targets, pred)
        return loss, {"a": np.array([np.sum(d * inputs)]), "b": np.array([np.sum(d)])}

    def evaluate_loss(self, inputs, targets):
        return self.loss_and_grads(inputs, targets)[0]


class TestMinibatchTrainer:
    def test_fixed_epochs_without_early_stopping(self):
        x = np.linspace(-1, 1, 40)
        model = _Quadratic()
        history = MinibatchTrainer(learning_rate=0.05, max_epochs=7, early_stopping=False).fit(model, x, 2 * x + 1)
        assert len(history.epochs) == 7
        assert history.final_loss < history.initial_loss

    def test_trainable_subset_freezes_the_rest(self):
        x = np.linspace(-1, 1, 40)
        model = _Quadratic()
        MinibatchTrainer(learning_rate=0.05, max_epochs=3, early_stopping=False, trainable=["b"]).fit(
            model, x, 2 * x + 1
        )
        assert model.params["a"][0] == 0.0
        assert model.params["b"][0] != 0.0

    def test_seeded_runs_are_identical(self):
        x = np.linspace(-1, 1, 50)
        first, second = _Quadratic(), _Quadratic()
        for model in (first, second):
            MinibatchTrainer(learning_rate=0.05, max_epochs=5, batch_size=8, seed=3).fit(model, x, 3 * x)
        np.testing.assert_array_equal(first.params["a"], second.params["a"])

    def test_history_csv(self, tmp_path):
        x = np.linspace(-1, 1, 20)
        history = MinibatchTrainer(max_epochs=2, early_stopping=False).fit(_Quadratic(), x, x)
        path = tmp_path / "log.csv"
        history.write_csv(path)
        lines = path.read_text().splitlines()
        assert len(lines) == 3


def test_checkpoint_roundtrip_is_bit_exact(tmp_path, rng):
    params = {"layer.weights": rng.normal(size=(3, 2)), "layer.bias": rng.normal(size=3)}
    path = save_checkpoint(tmp_path / "model.npz", params, {"kind": "test", "width": 3})
    loaded, meta = load_checkpoint(path)
    assert meta["kind"] == "test" and meta["width"] == 3
    for name, value in params.items():
        np.testing.assert_array_equal(loaded[name], value)
