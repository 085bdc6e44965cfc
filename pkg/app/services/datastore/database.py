"""Synthetic multi-table database at block granularity."""

import hashlib
import json
import math
import string
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np
from loguru import logger

from app.exceptions import ConfigurationError, IntegrityError
from app.schemas import ColumnDistribution, ColumnKind, ColumnSpec, DatabaseSpec

# Seed salt of the join correlation map.
_JOIN_SALT = 7919
_BASE_VOCABULARY = [
    "GALAXY", "STAR", "QSO", "UNKNOWN", "SKY", "B&D_NaD", "LRG", "ELG",
    "STAR_BHB", "STAR_CARBON", "QA", "HOT_STD",
]


class BlockId(NamedTuple):
    """Global block identity (table_id, block_no)."""

    table_id: int
    block_no: int


@dataclass(frozen=True)
class TableSchema:
    """Shape of one table."""

    table_id: int
    name: str
    columns: tuple[ColumnSpec, ...]
    row_count: int
    rows_per_block: int

    @property
    def n_blocks(self) -> int:
        return math.ceil(self.row_count / self.rows_per_block)

    def column_kinds(self) -> list[tuple[str, ColumnKind]]:
        return [(c.name, c.kind) for c in self.columns]


@dataclass
class Block:
    """Rows of one block, stored column-wise."""

    table_id: int
    block_no: int
    cells: dict[str, np.ndarray]

    @property
    def block_id(self) -> BlockId:
        return BlockId(self.table_id, self.block_no)

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.cells.values()))) if self.cells else 0

    @property
    def rows(self) -> list[tuple]:
        """Row-major view (rows_per_block x columns)."""
        columns = list(self.cells.values())
        return [tuple(col[i] for col in columns) for i in range(self.n_rows)]


@dataclass
class Table:
    """Schema plus materialized column data."""

    schema: TableSchema
    data: dict[str, np.ndarray]
    vocabularies: dict[str, list[str]] = field(default_factory=dict)

    @property
    def table_id(self) -> int:
        return self.schema.table_id

    @property
    def n_blocks(self) -> int:
        return self.schema.n_blocks

    def block_rows(self, block_no: int) -> slice:
        if not 0 <= block_no < self.n_blocks:
            raise IntegrityError(
                f"Block {block_no} outside table {self.schema.name} ({self.n_blocks} blocks)"
            )
        start = block_no * self.schema.rows_per_block
        return slice(start, min(start + self.schema.rows_per_block, self.schema.row_count))

    def block(self, block_no: int) -> Block:
        rows = self.block_rows(block_no)
        return Block(
            table_id=self.table_id,
            block_no=block_no,
            cells={name: values[rows] for name, values in self.data.items()},
        )

    def blocks(self) -> Iterator[Block]:
        for block_no in range(self.n_blocks):
            yield self.block(block_no)


class AddressSpace:
    """Linear LBA space: tables concatenated in table_id order."""

    def __init__(self, blocks_per_table: list[int]):
        self.blocks_per_table = list(blocks_per_table)
        self.offsets = np.concatenate([[0], np.cumsum(self.blocks_per_table)]).astype(np.int64)

    @property
    def total_blocks(self) -> int:
        return int(self.offsets[-1])

    def contains(self, block: BlockId) -> bool:
        return (
            0 <= block.table_id < len(self.blocks_per_table)
            and 0 <= block.block_no < self.blocks_per_table[block.table_id]
        )

    def lba(self, block: BlockId) -> int:
        if not self.contains(block):
            raise IntegrityError(f"Block {tuple(block)} does not exist")
        return int(self.offsets[block.table_id]) + block.block_no

    def block_of(self, lba: int) -> BlockId:
        if not 0 <= lba < self.total_blocks:
            raise IntegrityError(f"LBA {lba} outside address space of {self.total_blocks} blocks")
        table_id = int(np.searchsorted(self.offsets, lba, side="right")) - 1
        return BlockId(table_id, lba - int(self.offsets[table_id]))

    def is_valid_lba(self, lba: int) -> bool:
        return 0 <= lba < self.total_blocks


@dataclass(frozen=True)
class TileGrid:
    """rows x cols tiles laid over one table; each tile owns a contiguous block range."""

    table_id: int
    rows: int
    cols: int
    n_blocks: int

    @property
    def n_tiles(self) -> int:
        return self.rows * self.cols

    def clamp(self, row: int, col: int) -> tuple[int, int]:
        return min(max(row, 0), self.rows - 1), min(max(col, 0), self.cols - 1)

    def tile_blocks(self, row: int, col: int) -> list[BlockId]:
        index = row * self.cols + col
        start = index * self.n_blocks // self.n_tiles
        end = max((index + 1) * self.n_blocks // self.n_tiles, start + 1)
        return [BlockId(self.table_id, b) for b in range(start, min(end, self.n_blocks))]

    def viewport_blocks(self, row: int, col: int, zoom: int) -> frozenset[BlockId]:
        """Blocks of every tile within Chebyshev distance zoom of (row, col), clamped to the grid."""
        r0, c0 = self.clamp(row - zoom, col - zoom)
        r1, c1 = self.clamp(row + zoom, col + zoom)
        blocks: set[BlockId] = set()
        for r in range(r0, r1 + 1):
            for c in range(c0, c1 + 1):
                blocks.update(self.tile_blocks(r, c))
        return frozenset(blocks)


@dataclass
class Database:
    """Generated database: tables, address space, join correlation map and optional tile grid."""

    spec: DatabaseSpec
    seed: int
    tables: list[Table]
    join_offsets: np.ndarray
    address_space: AddressSpace
    grid: TileGrid | None = None

    @property
    def n_tables(self) -> int:
        return len(self.tables)

    @property
    def total_blocks(self) -> int:
        return self.address_space.total_blocks

    def table(self, table_id: int) -> Table:
        if not 0 <= table_id < self.n_tables:
            raise IntegrityError(f"Table {table_id} does not exist")
        return self.tables[table_id]

    def n_blocks(self, table_id: int) -> int:
        return self.table(table_id).n_blocks

    def contains(self, block: BlockId) -> bool:
        return self.address_space.contains(block)

    def all_blocks(self) -> Iterator[BlockId]:
        for table in self.tables:
            for block_no in range(table.n_blocks):
                yield BlockId(table.table_id, block_no)

    def correlated_start(self, source: int, target: int, start: int, width: int) -> int:
        """Start of the range in target joined with [start, start+width) of source."""
        n_src, n_dst = self.n_blocks(source), self.n_blocks(target)
        width = min(width, n_dst)
        mapped = (start * n_dst // max(n_src, 1) + int(self.join_offsets[source, target])) % n_dst
        return min(mapped, n_dst - width)

    def fingerprint(self) -> str:
        """Short identifier of (spec, seed) used as a trace's database reference."""
        payload = json.dumps(
            {"seed": self.seed, "spec": self.spec.model_dump(mode="json")}, sort_keys=True
        )
        return hashlib.md5(payload.encode("utf-8")).hexdigest()[:12]


def _make_vocabulary(rng: np.random.Generator, size: int) -> list[str]:
    words = list(_BASE_VOCABULARY[:size])
    letters = np.array(list(string.ascii_uppercase + "_"))
    seen = set(words)
    while len(words) < size:
        word = "".join(rng.choice(letters, size=int(rng.integers(4, 9))))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _to_epoch(ts: datetime) -> float:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.timestamp()


def _generate_column(
    column: ColumnSpec, n_rows: int, rng: np.random.Generator
) -> tuple[np.ndarray, list[str] | None]:
    sequential = column.distribution == ColumnDistribution.SEQUENTIAL
    if column.kind == ColumnKind.NUMERIC:
        values = rng.uniform(column.low, column.high, size=n_rows)
        return (np.sort(values) if sequential else values), None
    if column.kind == ColumnKind.DATETIME:
        lo, hi = _to_epoch(column.start), _to_epoch(column.end)
        seconds = rng.uniform(lo, hi, size=n_rows)
        if sequential:
            seconds = np.sort(seconds)
        return seconds.astype("int64").astype("datetime64[s]"), None
    vocabulary = _make_vocabulary(rng, column.vocabulary_size)
    idx = rng.integers(0, len(vocabulary), size=n_rows)
    if sequential:
        idx = np.sort(idx)
    return np.array([vocabulary[i] for i in idx], dtype=object), vocabulary


def generate_database(spec: DatabaseSpec, seed: int) -> Database:
    """
    Materialize a database from its declarative spec.

    Args:
        spec: Tables, columns and optional tile grid
        seed: RNG seed; (spec, seed) fully determines the result

    Returns:
        Database with table_ids 0..n-1 in spec order
    """
    if not spec.tables:
        raise ConfigurationError("Database spec names no tables")
    names = [t.name for t in spec.tables]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"Duplicate table names in spec: {names}")

    tables: list[Table] = []
    for table_id, table_spec in enumerate(spec.tables):
        if not any(c.kind == ColumnKind.NUMERIC for c in table_spec.columns):
            raise ConfigurationError(f"Table {table_spec.name} has no numeric column")
        schema = TableSchema(
            table_id=table_id,
            name=table_spec.name,
            columns=tuple(table_spec.columns),
            row_count=table_spec.row_count,
            rows_per_block=table_spec.rows_per_block,
        )
        data: dict[str, np.ndarray] = {}
        vocabularies: dict[str, list[str]] = {}
        for col_idx, column in enumerate(table_spec.columns):
            rng = np.random.default_rng([seed, table_id, col_idx])
            values, vocabulary = _generate_column(column, table_spec.row_count, rng)
            data[column.name] = values
            if vocabulary is not None:
                vocabularies[column.name] = vocabulary
        tables.append(Table(schema=schema, data=data, vocabularies=vocabularies))

    blocks_per_table = [t.n_blocks for t in tables]
    join_rng = np.random.default_rng([seed, _JOIN_SALT])
    join_offsets = np.zeros((len(tables), len(tables)), dtype=np.int64)
    for i in range(len(tables)):
        for j in range(len(tables)):
            if i != j and blocks_per_table[j] > 0:
                join_offsets[i, j] = join_rng.integers(0, blocks_per_table[j])

    grid = None
    if spec.grid is not None:
        if spec.grid.table not in names:
            raise ConfigurationError(f"Grid table {spec.grid.table} is not in the spec")
        grid_table = names.index(spec.grid.table)
        grid = TileGrid(grid_table, spec.grid.rows, spec.grid.cols, blocks_per_table[grid_table])

    db = Database(
        spec=spec,
        seed=seed,
        tables=tables,
        join_offsets=join_offsets,
        address_space=AddressSpace(blocks_per_table),
        grid=grid,
    )
    logger.info(
        f"Generated database: {db.n_tables} tables, {db.total_blocks} blocks, seed={seed}"
    )
    return db


def save_database(db: Database, path: str | Path) -> Path:
    """Write the manifest (spec + seed); data is regenerated on load."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": db.seed, "spec": db.spec.model_dump(mode="json")}
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path


def load_database(path: str | Path) -> Database:
    """Rebuild a database from its manifest."""
    path = Path(path)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
        spec = DatabaseSpec.model_validate(manifest["spec"])
        seed = int(manifest["seed"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid database manifest {path}: {e}") from e
    return generate_database(spec, seed)
