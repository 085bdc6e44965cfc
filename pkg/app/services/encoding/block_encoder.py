"""Block encodings: computing, storing and persisting enc(b)."""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np
from loguru import logger

from app.exceptions import DimensionError, IntegrityError, NumericError
from app.nn import TrainingHistory
from app.schemas import ExperimentConfig
from app.services.datastore import BlockId, Database
from .autoencoder import AutoencoderModel, train_autoencoder
from .preprocessing import TablePreprocessor, preprocess_table

_HEADER = struct.Struct("<qqq")  # table_id, l_be, record count


@dataclass(frozen=True)
class BlockEncoding:
    """enc(b) of one block."""

    table_id: int
    block_no: int
    vector: np.ndarray

    @property
    def block_id(self) -> BlockId:
        return BlockId(self.table_id, self.block_no)


def encode_block(model: AutoencoderModel, block_no: int, block_matrix: np.ndarray) -> BlockEncoding:
    """Encoder forward pass on the flattened block matrix."""
    flat = np.asarray(block_matrix, dtype=np.float64).reshape(-1)
    if flat.size != model.input_dim:
        raise DimensionError(
            f"Block of {flat.size} values does not fit autoencoder of table {model.table_id} "
            f"({model.input_dim} inputs)"
        )
    vector = model.encode(flat)
    if not np.all(np.isfinite(vector)):
        raise NumericError(f"Non-finite encoding for block ({model.table_id}, {block_no})")
    return BlockEncoding(model.table_id, block_no, vector)


class EncodingStore:
    """Stored block encodings, keyed by BlockId."""

    def __init__(self, l_be: int):
        self.l_be = l_be
        self._vectors: dict[BlockId, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, block: BlockId) -> bool:
        return block in self._vectors

    def put(self, encoding: BlockEncoding) -> None:
        if encoding.vector.shape != (self.l_be,):
            raise DimensionError(f"Encoding length {encoding.vector.shape} != l_be {self.l_be}")
        self._vectors[encoding.block_id] = encoding.vector

    def get(self, block: BlockId) -> np.ndarray:
        try:
            return self._vectors[block]
        except KeyError:
            raise IntegrityError(f"No stored encoding for block {tuple(block)}") from None

    def blocks(self) -> Iterator[BlockId]:
        return iter(sorted(self._vectors))

    def table_ids(self) -> list[int]:
        return sorted({b.table_id for b in self._vectors})

    def save(self, directory: str | Path) -> list[Path]:
        """One file per table: header (table_id, l_be, n) then (block_no, l_be float64) records."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for table_id in self.table_ids():
            blocks = [b for b in self.blocks() if b.table_id == table_id]
            path = directory / f"table_{table_id}.enc"
            with path.open("wb") as f:
                f.write(_HEADER.pack(table_id, self.l_be, len(blocks)))
                for block in blocks:
                    f.write(struct.pack("<q", block.block_no))
                    f.write(self._vectors[block].astype("<f8").tobytes())
            paths.append(path)
        return paths

    @classmethod
    def load(cls, directory: str | Path) -> "EncodingStore":
        directory = Path(directory)
        store: EncodingStore | None = None
        for path in sorted(directory.glob("table_*.enc")):
            data = path.read_bytes()
            if len(data) < _HEADER.size:
                raise IntegrityError(f"Truncated encoding file {path}")
            table_id, l_be, count = _HEADER.unpack_from(data, 0)
            if store is None:
                store = cls(l_be)
            elif store.l_be != l_be:
                raise IntegrityError(f"{path} has l_be={l_be}, expected {store.l_be}")
            record = 8 + 8 * l_be
            if len(data) != _HEADER.size + count * record:
                raise IntegrityError(f"Encoding file {path} has a wrong length")
            for i in range(count):
                offset = _HEADER.size + i * record
                (block_no,) = struct.unpack_from("<q", data, offset)
                vector = np.frombuffer(data, dtype="<f8", count=l_be, offset=offset + 8).astype(np.float64)
                store.put(BlockEncoding(table_id, block_no, vector))
        if store is None:
            raise IntegrityError(f"No encoding files in {directory}")
        return store


@dataclass
class EncodingArtifacts:
    """Everything block encoding produced for one database."""

    store: EncodingStore
    preprocessors: dict[int, TablePreprocessor] = field(default_factory=dict)
    autoencoders: dict[int, AutoencoderModel] = field(default_factory=dict)
    histories: dict[int, TrainingHistory] = field(default_factory=dict)


def encode_database(
    db: Database,
    config: ExperimentConfig,
    progress_callback: Callable[[str, int, int], None] | None = None,
) -> EncodingArtifacts:
    """
    Preprocess every table, train its autoencoder and store all block encodings.

    Args:
        db: Generated database
        config: Supplies l_be, PCA bound, training knobs and model_seed
        progress_callback: Optional (stage, current, total) callback

    Returns:
        EncodingArtifacts
    """
    artifacts = EncodingArtifacts(store=EncodingStore(config.l_be))
    tables = [t for t in db.tables if t.n_blocks > 0]
    for i, table in enumerate(tables, start=1):
        preprocessed, preprocessor = preprocess_table(table, config.pca_max_components)
        model, history = train_autoencoder(
            table.table_id,
            preprocessed.blocks,
            config.l_be,
            seed=config.model_seed,
            learning_rate=config.autoencoder_learning_rate,
            max_epochs=config.max_epochs,
            batch_size=config.batch_size,
            validation_fraction=config.validation_fraction,
            patience=config.patience,
        )
        for block_no in range(preprocessed.n_blocks):
            artifacts.store.put(encode_block(model, block_no, preprocessed.blocks[block_no]))
        artifacts.preprocessors[table.table_id] = preprocessor
        artifacts.autoencoders[table.table_id] = model
        artifacts.histories[table.table_id] = history
        logger.info(
            f"Encoded table {table.schema.name}: {preprocessed.n_blocks} blocks, "
            f"d_reduced={preprocessor.output_dim}, MSE={history.final_loss:.5f}"
        )
        if progress_callback:
            progress_callback("encode", i, len(tables))
    return artifacts
