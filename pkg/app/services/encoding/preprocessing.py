"""Per-column conversion and min-max normalization of table data."""

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache

import numpy as np

from app.exceptions import ConfigurationError, ConversionError, DimensionError
from app.schemas import ColumnKind
from app.services.datastore import Block, Table
from .pca import PcaModel, apply_pca, fit_pca, identity_pca

TEXT_EMBED_DIM = 8
TRIGRAM_BUCKETS = 256
PROJECTION_SEED = 1_000_003


@dataclass(frozen=True)
class ColumnStats:
    """min(X) and max(X) of one feature column, fit once on the training table."""

    min: float
    max: float

    @classmethod
    def from_values(cls, values: np.ndarray) -> "ColumnStats":
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            return cls(0.0, 0.0)
        return cls(float(values.min()), float(values.max()))


def normalize_column(values: np.ndarray, stats: ColumnStats) -> np.ndarray:
    """(x - min) / (max - min) * 2 - 1, clipped to [-1, 1]; 0 for a constant column."""
    values = np.asarray(values, dtype=np.float64)
    if stats.max == stats.min:
        return np.zeros_like(values)
    scaled = (values - stats.min) / (stats.max - stats.min) * 2.0 - 1.0
    return np.clip(scaled, -1.0, 1.0)


@lru_cache(maxsize=1)
def _text_projection() -> np.ndarray:
    rng = np.random.default_rng(PROJECTION_SEED)
    return rng.normal(0.0, 1.0, size=(TEXT_EMBED_DIM, TRIGRAM_BUCKETS))


def embed_text(s: str) -> np.ndarray:
    """Deterministic 8-dim embedding: hashed character-trigram bag, fixed projection, tanh."""
    if not s:
        return np.zeros(TEXT_EMBED_DIM)
    padded = f"^{s}$"
    bag = np.zeros(TRIGRAM_BUCKETS)
    for i in range(max(len(padded) - 2, 1)):
        gram = padded[i:i + 3]
        bucket = int.from_bytes(hashlib.md5(gram.encode("utf-8")).digest()[:4], "little")
        bag[bucket % TRIGRAM_BUCKETS] += 1.0
    bag /= np.linalg.norm(bag)
    return np.tanh(_text_projection() @ bag)


def datetime_to_number(ts: datetime | np.datetime64) -> int:
    """Seconds since the Unix epoch; naive datetimes are taken as UTC."""
    if isinstance(ts, np.datetime64):
        if np.isnat(ts):
            raise ConversionError("Cannot convert NaT to a timestamp")
        return int(ts.astype("datetime64[s]").astype(np.int64))
    if not isinstance(ts, datetime):
        raise ConversionError(f"Not a datetime: {ts!r}")
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    try:
        return int(ts.timestamp() // 1)
    except (OverflowError, OSError, ValueError) as e:
        raise ConversionError(f"Timestamp out of range: {ts!r}") from e


def _datetime_column(values: np.ndarray) -> np.ndarray:
    if np.issubdtype(values.dtype, np.datetime64):
        if np.isnat(values).any():
            raise ConversionError("Datetime column contains NaT")
        return values.astype("datetime64[s]").astype(np.int64).astype(np.float64)
    return np.array([datetime_to_number(v) for v in values], dtype=np.float64)


def _numeric_column(name: str, values: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ConversionError(f"Column {name} is not numeric") from e
    if not np.all(np.isfinite(out)):
        raise ConversionError(f"Column {name} contains non-finite values")
    return out


def _text_column(values: np.ndarray) -> np.ndarray:
    cache: dict[str, np.ndarray] = {}
    out = np.empty((len(values), TEXT_EMBED_DIM))
    for i, value in enumerate(values):
        key = "" if value is None else str(value)
        if key not in cache:
            cache[key] = embed_text(key)
        out[i] = cache[key]
    return out


def convert_columns(table_columns: list[tuple[str, ColumnKind]], cells: dict[str, np.ndarray]) -> tuple[np.ndarray, list[str]]:
    """Type conversion to a raw numeric feature matrix (rows x features)."""
    features: list[np.ndarray] = []
    names: list[str] = []
    for name, kind in table_columns:
        values = cells[name]
        if kind == ColumnKind.NUMERIC:
            features.append(_numeric_column(name, values)[:, None])
            names.append(name)
        elif kind == ColumnKind.DATETIME:
            features.append(_datetime_column(values)[:, None])
            names.append(name)
        else:
            features.append(_text_column(values))
            names.extend(f"{name}[{j}]" for j in range(TEXT_EMBED_DIM))
    return np.hstack(features), names


@dataclass
class PreprocessedTable:
    """Per-block matrices of one table (n_blocks x rows_per_block x d_reduced)."""

    table_id: int
    blocks: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    @property
    def n_blocks(self) -> int:
        return self.blocks.shape[0]

    def flattened(self) -> np.ndarray:
        return self.blocks.reshape(self.n_blocks, -1)


class TablePreprocessor:
    """conversion -> min-max normalization -> PCA, fit once per table."""

    def __init__(self, pca_max_components: int = 16):
        if pca_max_components < 1:
            raise ConfigurationError("pca_max_components must be at least 1")
        self.pca_max_components = pca_max_components
        self.table_id: int | None = None
        self.rows_per_block = 0
        self.columns: list[tuple[str, ColumnKind]] = []
        self.feature_names: list[str] = []
        self.column_stats: list[ColumnStats] = []
        self.pca: PcaModel | None = None

    @property
    def output_dim(self) -> int:
        if self.pca is None:
            raise ConfigurationError("Preprocessor is not fitted")
        return self.pca.d_reduced

    def fit(self, table: Table) -> "TablePreprocessor":
        if table.schema.row_count == 0:
            raise ConfigurationError(f"Table {table.schema.name} is empty")
        self.table_id = table.table_id
        self.rows_per_block = table.schema.rows_per_block
        self.columns = table.schema.column_kinds()
        raw, self.feature_names = convert_columns(self.columns, table.data)
        self.column_stats = [ColumnStats.from_values(raw[:, j]) for j in range(raw.shape[1])]
        normalized = self._normalize(raw)
        d_reduced = min(raw.shape[1], self.pca_max_components)
        if normalized.shape[0] >= 2:
            self.pca = fit_pca(normalized, d_reduced)
        else:
            self.pca = identity_pca(raw.shape[1], d_reduced)
        return self

    def _normalize(self, raw: np.ndarray) -> np.ndarray:
        return np.column_stack(
            [normalize_column(raw[:, j], stats) for j, stats in enumerate(self.column_stats)]
        )

    def transform_cells(self, cells: dict[str, np.ndarray]) -> np.ndarray:
        """Rows of cell values to (rows x d_reduced)."""
        if self.pca is None:
            raise ConfigurationError("Preprocessor is not fitted")
        raw, _ = convert_columns(self.columns, cells)
        if raw.shape[1] != len(self.column_stats):
            raise DimensionError(
                f"Expected {len(self.column_stats)} raw features, got {raw.shape[1]}"
            )
        return apply_pca(self.pca, self._normalize(raw))

    def transform_block(self, block: Block) -> np.ndarray:
        """One block as a (rows_per_block x d_reduced) matrix; a short block is zero-padded."""
        reduced = self.transform_cells(block.cells)
        out = np.zeros((self.rows_per_block, reduced.shape[1]))
        out[: reduced.shape[0]] = reduced
        return out

    def transform_table(self, table: Table) -> PreprocessedTable:
        reduced = self.transform_cells(table.data)
        rpb = self.rows_per_block
        padded = np.zeros((table.n_blocks * rpb, reduced.shape[1]))
        padded[: reduced.shape[0]] = reduced
        return PreprocessedTable(
            table_id=table.table_id,
            blocks=padded.reshape(table.n_blocks, rpb, reduced.shape[1]),
            feature_names=list(self.feature_names),
        )


def preprocess_table(table: Table, pca_max_components: int = 16) -> tuple[PreprocessedTable, TablePreprocessor]:
    """
    Fit and apply the preprocessing pipeline to a whole table.

    Args:
        table: Materialized table
        pca_max_components: Upper bound on the reduced dimension

    Returns:
        (per-block matrices, fitted preprocessor holding ColumnStats and the PcaModel)
    """
    preprocessor = TablePreprocessor(pca_max_components).fit(table)
    return preprocessor.transform_table(table), preprocessor
