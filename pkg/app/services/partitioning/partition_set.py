"""Partitions of blocks, the initial consecutive packing, and co-access load."""

import math
from dataclasses import dataclass, field
from pathlib import Path

from app.exceptions import ConfigurationError, IntegrityError
from app.services.datastore import BlockId, Database
from .affinity_graph import AffinityGraph


@dataclass
class Partition:
    """A bounded group of blocks."""

    partition_id: int
    blocks: set[BlockId] = field(default_factory=set)

    @property
    def size(self) -> int:
        return len(self.blocks)

    def sorted_blocks(self) -> list[BlockId]:
        return sorted(self.blocks)


class PartitionSet:
    """Fixed number of disjoint partitions plus the dynamic max-load threshold theta."""

    def __init__(self, partitions: list[Partition], max_par_size: int, theta: float, k_w: float):
        if max_par_size < 1:
            raise ConfigurationError(f"MaxParSize must be at least 1, got {max_par_size}")
        self.partitions = partitions
        self.max_par_size = max_par_size
        self.theta = theta
        self.k_w = k_w
        self._assignment: dict[BlockId, int] = {}
        for p in partitions:
            for block in p.blocks:
                if block in self._assignment:
                    raise IntegrityError(f"Block {tuple(block)} is in two partitions")
                self._assignment[block] = p.partition_id
        self.check_invariants()

    @property
    def n_partitions(self) -> int:
        return len(self.partitions)

    def __getitem__(self, partition_id: int) -> Partition:
        if not 0 <= partition_id < self.n_partitions:
            raise IntegrityError(f"Partition {partition_id} does not exist")
        return self.partitions[partition_id]

    def partition_of(self, block: BlockId) -> int:
        try:
            return self._assignment[block]
        except KeyError:
            raise IntegrityError(f"Block {tuple(block)} is not assigned to any partition") from None

    def partitions_of(self, blocks) -> set[int]:
        """res^P: ids of the partitions holding the given blocks."""
        return {self.partition_of(b) for b in blocks}

    def assigned_blocks(self) -> int:
        return len(self._assignment)

    def empty_partitions(self) -> list[int]:
        return [p.partition_id for p in self.partitions if not p.blocks]

    def move(self, blocks: set[BlockId], destination: int) -> dict[int, list[BlockId]]:
        """Move blocks into destination; returns the moved blocks grouped by source partition."""
        dest = self[destination]
        by_source: dict[int, list[BlockId]] = {}
        for block in sorted(blocks):
            source = self.partition_of(block)
            if source == destination:
                continue
            self.partitions[source].blocks.discard(block)
            dest.blocks.add(block)
            self._assignment[block] = destination
            by_source.setdefault(source, []).append(block)
        return by_source

    def check_invariants(self) -> None:
        seen = 0
        for index, p in enumerate(self.partitions):
            if p.partition_id != index:
                raise IntegrityError(f"Partition at position {index} has id {p.partition_id}")
            if p.size > self.max_par_size:
                raise IntegrityError(
                    f"Partition {p.partition_id} holds {p.size} blocks > MaxParSize {self.max_par_size}"
                )
            seen += p.size
        if seen != len(self._assignment):
            raise IntegrityError("Partitions are not disjoint")

    def save_map(self, path: str | Path) -> Path:
        """Lines of "partition_id table_id block_no"."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            for p in self.partitions:
                for block in p.sorted_blocks():
                    f.write(f"{p.partition_id} {block.table_id} {block.block_no}\n")
        return path

    @classmethod
    def load_map(
        cls, path: str | Path, n_partitions: int, max_par_size: int, theta: float, k_w: float
    ) -> "PartitionSet":
        partitions = [Partition(i) for i in range(n_partitions)]
        with Path(path).open("r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    pid, table_id, block_no = (int(v) for v in line.split())
                except ValueError as e:
                    raise IntegrityError(f"{path} line {line_no}: expected 3 integers") from e
                if not 0 <= pid < n_partitions:
                    raise IntegrityError(f"{path} line {line_no}: partition {pid} out of range")
                partitions[pid].blocks.add(BlockId(table_id, block_no))
        return cls(partitions, max_par_size, theta, k_w)

    def copy(self) -> "PartitionSet":
        return PartitionSet(
            [Partition(p.partition_id, set(p.blocks)) for p in self.partitions],
            self.max_par_size,
            self.theta,
            self.k_w,
        )


def initial_partitions(
    db: Database,
    max_par_size: int,
    fill_frac: float = 0.95,
    spare_frac: float = 0.05,
    theta: float = 1.0,
    k_w: float = 10.0,
) -> PartitionSet:
    """
    Pack consecutive blocks of each table into partitions, then append empty spares.

    Args:
        db: Generated database
        max_par_size: Partition capacity in blocks
        fill_frac: Initial fill per partition (floor(fill_frac * MaxParSize) blocks)
        spare_frac: Spare partitions as a fraction of the non-empty ones (rounded up)
        theta: Initial max-load threshold
        k_w: Inter-partition tolerance constant

    Returns:
        PartitionSet
    """
    if max_par_size < 1:
        raise ConfigurationError(f"MaxParSize must be at least 1, got {max_par_size}")
    if not 0.0 < fill_frac <= 1.0:
        raise ConfigurationError(f"fill_frac must be in (0, 1], got {fill_frac}")
    chunk = max(1, math.floor(fill_frac * max_par_size))
    partitions: list[Partition] = []
    for table in db.tables:
        for start in range(0, table.n_blocks, chunk):
            blocks = {BlockId(table.table_id, b) for b in range(start, min(start + chunk, table.n_blocks))}
            partitions.append(Partition(len(partitions), blocks))
    if not partitions:
        raise ConfigurationError("Database has no blocks to partition")
    n_spare = math.ceil(spare_frac * len(partitions))
    for _ in range(n_spare):
        partitions.append(Partition(len(partitions)))
    return PartitionSet(partitions, max_par_size, theta, k_w)


def load_of_blocks(blocks: set[BlockId], graph: AffinityGraph, k_w: float) -> float:
    """Sum of k_w * w over edges leaving the block set."""
    total = 0.0
    for v in sorted(blocks):
        for u, w in graph.neighbors(v).items():
            if u not in blocks:
                total += w
    return total * k_w


def partition_load(partition: Partition, graph: AffinityGraph, k_w: float) -> float:
    """Co-access load of one partition; per-block access counts play no part."""
    return load_of_blocks(partition.blocks, graph, k_w)
