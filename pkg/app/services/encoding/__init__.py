"""Block encoding: preprocessing, PCA and per-table autoencoders."""

from .autoencoder import AutoencoderModel, train_autoencoder
from .block_encoder import (
    BlockEncoding,
    EncodingArtifacts,
    EncodingStore,
    encode_block,
    encode_database,
)
from .pca import PcaModel, apply_pca, fit_pca, reconstruct
from .preprocessing import (
    ColumnStats,
    PreprocessedTable,
    TablePreprocessor,
    datetime_to_number,
    embed_text,
    normalize_column,
    preprocess_table,
)

__all__ = [
    "AutoencoderModel",
    "BlockEncoding",
    "ColumnStats",
    "EncodingArtifacts",
    "EncodingStore",
    "PcaModel",
    "PreprocessedTable",
    "TablePreprocessor",
    "apply_pca",
    "datetime_to_number",
    "embed_text",
    "encode_block",
    "encode_database",
    "fit_pca",
    "normalize_column",
    "preprocess_table",
    "reconstruct",
    "train_autoencoder",
]
