"""Query encodings and lookback-window training examples."""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from app.exceptions import DimensionError, IntegrityError
from app.services.datastore import QueryTrace
from app.services.partitioning import PartitionSet


@dataclass(frozen=True)
class QueryEncoding:
    """enc(q): mean of the encodings of the partitions a query touched."""

    query_id: int
    matrix: np.ndarray


def encode_query(
    res_p: Iterable[int],
    partition_matrices: np.ndarray,
    n_tb: int,
    l_be: int,
    query_id: int = -1,
) -> QueryEncoding:
    """
    Element-wise mean of the accessed partitions' encodings.

    Args:
        res_p: Ids of the partitions the query accessed (order is irrelevant)
        partition_matrices: (|P| x n_tb x l_be) current partition encodings
        n_tb: Number of tables
        l_be: Block encoding length
        query_id: Source query id

    Returns:
        QueryEncoding (zero matrix when res_p is empty)
    """
    if partition_matrices.shape[1:] != (n_tb, l_be):
        raise DimensionError(
            f"Partition encodings shaped {partition_matrices.shape[1:]}, expected {(n_tb, l_be)}"
        )
    ids = sorted(set(res_p))
    if not ids:
        return QueryEncoding(query_id, np.zeros((n_tb, l_be)))
    n_partitions = partition_matrices.shape[0]
    stale = [pid for pid in ids if not 0 <= pid < n_partitions]
    if stale:
        raise IntegrityError(f"Query {query_id} references unknown partitions {stale}")
    return QueryEncoding(query_id, partition_matrices[ids].mean(axis=0))


@dataclass
class TrainingSet:
    """Stacked examples: inputs (N x l x n_tb*l_be), targets (N x |P|) bit-vectors."""

    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def lookback(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_partitions(self) -> int:
        return self.targets.shape[1]

    def tail(self, n: int) -> "TrainingSet":
        start = max(0, len(self) - n)
        return TrainingSet(self.inputs[start:], self.targets[start:])


def build_examples(
    query_partitions: Sequence[set[int]],
    partition_matrices: np.ndarray,
    lookback: int,
) -> TrainingSet:
    """One example per window of `lookback` queries, targeting the following query's partitions."""
    n_partitions, n_tb, l_be = partition_matrices.shape
    n_examples = max(0, len(query_partitions) - lookback)
    inputs = np.zeros((n_examples, lookback, n_tb * l_be))
    targets = np.zeros((n_examples, n_partitions))
    if n_examples == 0:
        return TrainingSet(inputs, targets)
    encodings = np.stack([
        encode_query(res_p, partition_matrices, n_tb, l_be).matrix.reshape(-1)
        for res_p in query_partitions
    ])
    for n in range(n_examples):
        inputs[n] = encodings[n:n + lookback]
        targets[n, sorted(query_partitions[n + lookback])] = 1.0
    return TrainingSet(inputs, targets)


def build_training_set(
    trace: QueryTrace,
    ps: PartitionSet,
    partition_matrices: np.ndarray,
    lookback: int,
) -> TrainingSet:
    """
    Training examples for a trace under the current partition map.

    Args:
        trace: Query trace
        ps: Partition map (res^P of each query comes from it)
        partition_matrices: Current partition encodings
        lookback: Window length l

    Returns:
        TrainingSet of len(trace) - l examples (empty when the trace is shorter than l + 1)
    """
    return build_examples([ps.partitions_of(r.accessed_blocks) for r in trace], partition_matrices, lookback)
