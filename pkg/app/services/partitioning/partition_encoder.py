"""Partition encodings: one (n_tb x l_be) matrix per partition."""

from dataclasses import dataclass

import numpy as np

from app.exceptions import DimensionError, IntegrityError
from app.services.encoding import EncodingStore
from .partition_set import Partition, PartitionSet


@dataclass(frozen=True)
class PartitionEncoding:
    """enc(p): row j is the mean encoding of the partition's table-j blocks, else zeros."""

    partition_id: int
    matrix: np.ndarray


def encode_partition(partition: Partition, store: EncodingStore, n_tb: int, l_be: int) -> PartitionEncoding:
    """
    Per-table mean of the stored block encodings.

    Args:
        partition: Partition to encode
        store: Stored block encodings
        n_tb: Number of tables (matrix rows)
        l_be: Block encoding length (matrix columns)

    Returns:
        PartitionEncoding
    """
    matrix = np.zeros((n_tb, l_be))
    by_table: dict[int, list[np.ndarray]] = {}
    for block in partition.sorted_blocks():
        if block not in store:
            raise IntegrityError(
                f"Partition {partition.partition_id} holds block {tuple(block)} with no stored encoding"
            )
        if not 0 <= block.table_id < n_tb:
            raise DimensionError(f"Block {tuple(block)} outside {n_tb} tables")
        by_table.setdefault(block.table_id, []).append(store.get(block))
    for table_id, vectors in by_table.items():
        stacked = np.stack(vectors)
        if stacked.shape[1] != l_be:
            raise DimensionError(f"Encoding length {stacked.shape[1]} != l_be {l_be}")
        matrix[table_id] = stacked.mean(axis=0)
    return PartitionEncoding(partition.partition_id, matrix)


def encode_partitions(ps: PartitionSet, store: EncodingStore, n_tb: int) -> np.ndarray:
    """All partition encodings stacked as (|P| x n_tb x l_be)."""
    return np.stack([encode_partition(p, store, n_tb, store.l_be).matrix for p in ps.partitions])
