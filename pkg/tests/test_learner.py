"""Tests for query encodings, training examples and the partition-access model."""

import numpy as np
import pytest

from app.exceptions import ConfigurationError, DimensionError, IntegrityError
from app.nn import gradient_check
from app.services.learner import (
    HEAD_PARAMETERS,
    PredictionModel,
    build_examples,
    build_training_set,
    encode_query,
    fine_tune,
    predict_next,
    select_topk,
    train_model,
)
from app.services.partitioning import Partition, PartitionSet
from tests.conftest import blocks, make_trace


class TestQueryEncoding:
    def test_mean_of_accessed_partitions(self, rng):
        matrices = rng.normal(size=(5, 2, 3))
        encoding = encode_query({1, 3}, matrices, n_tb=2, l_be=3)
        np.testing.assert_allclose(encoding.matrix, (matrices[1] + matrices[3]) / 2)

    def test_order_does_not_matter(self, rng):
        matrices = rng.normal(size=(8, 2, 3))
        ids = [0, 2, 5, 7]
        expected = encode_query(ids, matrices, 2, 3).matrix
        for _ in range(1000):
            shuffled = list(rng.permutation(ids))
            np.testing.assert_array_equal(encode_query(shuffled, matrices, 2, 3).matrix, expected)

    def test_empty_query_is_zero(self, rng):
        assert not encode_query(set(), rng.normal(size=(3, 2, 2)), 2, 2).matrix.any()

    def test_unknown_partition(self, rng):
        with pytest.raises(IntegrityError):
            encode_query({4}, rng.normal(size=(3, 1, 2)), 1, 2)

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            encode_query({0}, rng.normal(size=(3, 1, 2)), 2, 2)


class TestExamples:
    def test_window_count_and_targets(self, rng):
        matrices = rng.normal(size=(4, 1, 2))
        queries = [{i % 4} for i in range(10)]
        examples = build_examples(queries, matrices, lookback=4)
        assert len(examples) == 6
        assert examples.inputs.shape == (6, 4, 2)
        np.testing.assert_array_equal(examples.targets[0], [1.0, 0.0, 0.0, 0.0])
        np.testing.assert_array_equal(examples.inputs[0, 0], matrices[0].reshape(-1))

    def test_short_trace_has_no_examples(self, rng):
        examples = build_examples([{0}, {1}], rng.normal(size=(2, 1, 2)), lookback=4)
        assert len(examples) == 0

    def test_from_trace(self, rng):
        ps = PartitionSet([Partition(0, blocks(0, 0, 1)), Partition(1, blocks(0, 2, 3))], 2, 1.0, 10.0)
        trace = make_trace([blocks(0, 0), blocks(0, 2), blocks(0, 1, 3), blocks(0, 0)])
        examples = build_training_set(trace, ps, rng.normal(size=(2, 1, 3)), lookback=2)
        np.testing.assert_array_equal(examples.targets, [[1.0, 1.0], [1.0, 0.0]])


class TestSelectTopk:
    def test_descending_with_ties_to_lower_id(self):
        assert select_topk(np.array([0.2, 0.9, 0.5, 0.9]), 3) == [1, 3, 2]

    def test_k_larger_than_partitions(self):
        assert select_topk(np.array([0.1, 0.3]), 5) == [1, 0]

    def test_zero_and_negative_k(self):
        assert select_topk(np.array([0.5]), 0) == []
        with pytest.raises(ConfigurationError):
            select_topk(np.array([0.5]), -1)


class TestPredictionModel:
    def test_full_stack_gradients(self, rng):
        model = PredictionModel.initialize(3, 3, lookback=2, seed=1, compressor_units=3, lstm_units=3)
        x = rng.normal(size=(2, 2, 3))
        y = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])

        def fn(params):
            model.set_parameters(params)
            return model.loss_and_grads(x, y)

        assert gradient_check(fn, model.get_parameters()) < 1e-4

    def test_output_is_probability(self, rng):
        model = PredictionModel.initialize(4, 6, lookback=3, seed=0, compressor_units=5, lstm_units=4)
        yhat = predict_next(model, rng.normal(size=(3, 4)))
        assert yhat.shape == (6,)
        assert np.all((yhat > 0) & (yhat < 1))

    def test_wrong_window_length(self, rng):
        model = PredictionModel.initialize(4, 2, lookback=3, seed=0, compressor_units=2, lstm_units=2)
        with pytest.raises(DimensionError):
            predict_next(model, rng.normal(size=(2, 4)))

    def test_learns_a_cyclic_pattern(self, rng):
        matrices = rng.normal(size=(4, 1, 4))
        queries = [{i % 4} for i in range(400)]
        examples = build_examples(queries, matrices, lookback=2)
        model, history = train_model(
            examples, n_partitions=4, seed=0, compressor_units=8, lstm_units=8,
            learning_rate=0.01, max_epochs=60, batch_size=32,
        )
        predicted = model.predict_batch(examples.inputs).argmax(axis=1)
        expected = examples.targets.argmax(axis=1)
        assert np.mean(predicted == expected) >= 0.95
        assert history.final_loss < history.initial_loss

    def test_train_without_examples(self, rng):
        empty = build_examples([{0}], rng.normal(size=(1, 1, 2)), lookback=2)
        with pytest.raises(ConfigurationError):
            train_model(empty, n_partitions=1, seed=0)

    def test_checkpoint_roundtrip(self, rng, tmp_path):
        model = PredictionModel.initialize(4, 3, lookback=2, seed=2, compressor_units=3, lstm_units=2)
        loaded = PredictionModel.load(model.save(tmp_path / "model.npz"))
        window = rng.normal(size=(2, 4))
        np.testing.assert_array_equal(loaded.predict(window), model.predict(window))


class TestFineTune:
    def _setup(self, rng):
        matrices = rng.normal(size=(3, 1, 2))
        examples = build_examples([{i % 3} for i in range(30)], matrices, lookback=2)
        model = PredictionModel.initialize(2, 3, lookback=2, seed=0, compressor_units=4, lstm_units=4)
        return model, examples

    def test_only_head_changes(self, rng):
        model, examples = self._setup(rng)
        before = model.get_parameters()
        history = fine_tune(model, examples, learning_rate=1e-2, epochs=2, batch_size=8)
        after = model.get_parameters()
        assert len(history.epochs) == 2
        for name in before:
            if name in HEAD_PARAMETERS:
                assert not np.array_equal(before[name], after[name])
            else:
                np.testing.assert_array_equal(before[name], after[name])

    def test_no_examples_leaves_model(self, rng):
        model, examples = self._setup(rng)
        before = model.get_parameters()
        history = fine_tune(model, examples.tail(0), epochs=3)
        assert history.epochs == []
        for name, value in model.get_parameters().items():
            np.testing.assert_array_equal(value, before[name])
