"""Tests for block preprocessing, PCA, autoencoders and the encoding store."""

from datetime import datetime, timezone

import numpy as np
import pytest

from app.exceptions import ConversionError, DimensionError, IntegrityError
from app.nn import gradient_check
from app.services.encoding import (
    AutoencoderModel,
    ColumnStats,
    EncodingStore,
    apply_pca,
    datetime_to_number,
    embed_text,
    encode_block,
    encode_database,
    fit_pca,
    normalize_column,
    preprocess_table,
    reconstruct,
    train_autoencoder,
)
from app.services.encoding.preprocessing import TEXT_EMBED_DIM


class TestNormalization:
    def test_endpoints_and_midpoint(self):
        out = normalize_column(np.array([2.0, 4.0, 6.0]), ColumnStats(2.0, 6.0))
        np.testing.assert_allclose(out, [-1.0, 0.0, 1.0])

    def test_constant_column(self):
        out = normalize_column(np.array([3.0, 3.0]), ColumnStats(3.0, 3.0))
        np.testing.assert_array_equal(out, [0.0, 0.0])

    def test_out_of_range_is_clipped(self):
        out = normalize_column(np.array([-10.0, 10.0]), ColumnStats(0.0, 1.0))
        np.testing.assert_array_equal(out, [-1.0, 1.0])


class TestConversions:
    def test_embed_text_deterministic(self):
        np.testing.assert_array_equal(embed_text("GALAXY"), embed_text("GALAXY"))

    def test_embed_text_empty_is_zero(self):
        vector = embed_text("")
        assert vector.shape == (TEXT_EMBED_DIM,)
        assert not vector.any()

    def test_embed_text_distinct_strings(self):
        assert not np.allclose(embed_text("GALAXY"), embed_text("STAR"))

    def test_embed_text_bounded(self):
        assert np.all(np.abs(embed_text("a much longer free-text value")) <= 1.0)

    def test_datetime_to_number(self):
        assert datetime_to_number(datetime(1970, 1, 1)) == 0
        assert datetime_to_number(datetime(1970, 1, 1, 1, tzinfo=timezone.utc)) == 3600
        assert datetime_to_number(np.datetime64("1970-01-01T01:00:00")) == 3600

    def test_datetime_nat(self):
        with pytest.raises(ConversionError):
            datetime_to_number(np.datetime64("NaT"))


class TestPca:
    def test_recovers_dominant_axis(self, rng):
        rows = np.column_stack([rng.normal(scale=10.0, size=200), rng.normal(scale=0.1, size=200)])
        model = fit_pca(rows, 1)
        np.testing.assert_allclose(np.abs(model.components[0]), [1.0, 0.0], atol=1e-3)
        assert model.components[0, 0] > 0

    def test_full_rank_reconstruction(self, rng):
        rows = rng.normal(size=(30, 4))
        model = fit_pca(rows, 4)
        restored = reconstruct(model, apply_pca(model, rows))
        assert np.max(np.abs(restored - rows)) < 1e-8

    def test_too_many_components(self, rng):
        with pytest.raises(DimensionError):
            fit_pca(rng.normal(size=(10, 3)), 4)

    def test_wrong_column_count(self, rng):
        model = fit_pca(rng.normal(size=(10, 3)), 2)
        with pytest.raises(DimensionError):
            apply_pca(model, np.zeros((2, 4)))


class TestPreprocessTable:
    def test_text_column_expands_to_embedding(self, small_db):
        preprocessed, preprocessor = preprocess_table(small_db.table(0), pca_max_components=32)
        assert [n for n in preprocessor.feature_names if n.startswith("obj_type[")] == [
            f"obj_type[{j}]" for j in range(TEXT_EMBED_DIM)
        ]
        # obj_id, ra, dec, observed_at plus the text embedding
        assert len(preprocessor.feature_names) == 4 + TEXT_EMBED_DIM
        assert preprocessed.blocks.shape == (32, 16, preprocessor.output_dim)

    def test_pca_bound(self, small_db):
        preprocessed, preprocessor = preprocess_table(small_db.table(1), pca_max_components=3)
        assert preprocessor.output_dim == 3
        assert preprocessed.blocks.shape[-1] == 3

    def test_block_transform_matches_table(self, small_db):
        table = small_db.table(0)
        preprocessed, preprocessor = preprocess_table(table, pca_max_components=4)
        np.testing.assert_allclose(preprocessor.transform_block(table.block(5)), preprocessed.blocks[5])


class TestAutoencoder:
    def test_gradients(self, rng):
        model = AutoencoderModel.initialize(0, input_dim=6, l_be=2, seed=3)
        x = rng.normal(size=(4, 6))

        def fn(params):
            model.set_parameters(params)
            return model.loss_and_grads(x, x)

        assert gradient_check(fn, model.get_parameters()) < 1e-4

    def test_learns_a_repeated_block(self, rng):
        block = rng.uniform(-1.0, 1.0, size=(4, 2))
        blocks = np.repeat(block[None], 64, axis=0)
        model, history = train_autoencoder(
            0, blocks, l_be=2, seed=0, learning_rate=0.01, max_epochs=200,
            batch_size=8, validation_fraction=0.0, patience=1000,
        )
        assert history.final_loss < 0.01
        assert history.final_loss <= history.initial_loss
        assert model.latent_dim == 2

    def test_seeded_training_is_deterministic(self, rng):
        blocks = rng.normal(size=(20, 3, 2))
        first, _ = train_autoencoder(1, blocks, l_be=3, seed=5, max_epochs=4, batch_size=4)
        second, _ = train_autoencoder(1, blocks, l_be=3, seed=5, max_epochs=4, batch_size=4)
        for name, value in first.get_parameters().items():
            np.testing.assert_array_equal(value, second.get_parameters()[name])

    def test_checkpoint_roundtrip(self, rng, tmp_path):
        model = AutoencoderModel.initialize(2, input_dim=5, l_be=3, seed=1)
        loaded = AutoencoderModel.load(model.save(tmp_path / "ae.npz"))
        x = rng.normal(size=5)
        np.testing.assert_array_equal(loaded.encode(x), model.encode(x))
        assert loaded.table_id == 2


class TestBlockEncoding:
    def test_encode_block_length(self, rng):
        model = AutoencoderModel.initialize(0, input_dim=8, l_be=4, seed=0)
        encoding = encode_block(model, 3, rng.normal(size=(4, 2)))
        assert encoding.vector.shape == (4,)
        assert tuple(encoding.block_id) == (0, 3)

    def test_encode_block_wrong_size(self):
        model = AutoencoderModel.initialize(0, input_dim=8, l_be=4, seed=0)
        with pytest.raises(DimensionError):
            encode_block(model, 0, np.zeros((3, 2)))

    def test_store_roundtrip(self, rng, tmp_path):
        model = AutoencoderModel.initialize(1, input_dim=6, l_be=3, seed=0)
        store = EncodingStore(3)
        for block_no in range(5):
            store.put(encode_block(model, block_no, rng.normal(size=6)))
        paths = store.save(tmp_path / "enc")
        assert [p.name for p in paths] == ["table_1.enc"]
        loaded = EncodingStore.load(tmp_path / "enc")
        assert len(loaded) == 5
        for block in store.blocks():
            np.testing.assert_array_equal(loaded.get(block), store.get(block))

    def test_missing_encoding(self):
        from app.services.datastore import BlockId

        with pytest.raises(IntegrityError):
            EncodingStore(2).get(BlockId(0, 0))

    def test_encode_database_covers_every_block(self, small_db, fast_config):
        artifacts = encode_database(small_db, fast_config.model_copy(update={"max_epochs": 1}))
        assert len(artifacts.store) == small_db.total_blocks
        assert sorted(artifacts.autoencoders) == [0, 1]
        for block in small_db.all_blocks():
            assert artifacts.store.get(block).shape == (fast_config.l_be,)
