"""Affinity graph, partitions and the clump-migration repartitioner."""

from .affinity_graph import AffinityGraph, decay_weights, observe_query
from .partition_encoder import PartitionEncoding, encode_partition, encode_partitions
from .partition_set import (
    Partition,
    PartitionSet,
    initial_partitions,
    load_of_blocks,
    partition_load,
)
from .repartitioner import (
    ClumpMigrationRepartitioner,
    MigrationRecord,
    RepartitionResult,
    repartition,
    save_migration_log,
)

__all__ = [
    "AffinityGraph",
    "ClumpMigrationRepartitioner",
    "MigrationRecord",
    "Partition",
    "PartitionEncoding",
    "PartitionSet",
    "RepartitionResult",
    "decay_weights",
    "encode_partition",
    "encode_partitions",
    "initial_partitions",
    "load_of_blocks",
    "observe_query",
    "partition_load",
    "repartition",
    "save_migration_log",
]
