"""LRU block cache with a demand path and a prefetch path."""

from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Iterable

from app.exceptions import ConfigurationError, IntegrityError
from app.services.datastore import BlockId
from app.services.partitioning import PartitionSet
from .io_cost import IoCostModel


@dataclass
class AccessResult:
    """Outcome of one query's demand accesses."""

    hits: int
    misses: int
    io_cost: float


class CacheState:
    """Resident blocks in LRU order (oldest first) plus demand and prefetch counters."""

    def __init__(self, capacity: int, is_valid: Callable[[BlockId], bool] | None = None):
        if capacity < 1:
            raise ConfigurationError(f"Cache capacity must be at least 1 block, got {capacity}")
        self.capacity = capacity
        self._is_valid = is_valid
        self._resident: OrderedDict[BlockId, None] = OrderedDict()
        self._unused_prefetches: set[BlockId] = set()
        self.hits = 0
        self.misses = 0
        self.prefetched_blocks = 0
        self.useful_prefetches = 0

    def __contains__(self, block: BlockId) -> bool:
        return block in self._resident

    def __len__(self) -> int:
        return len(self._resident)

    def resident(self) -> list[BlockId]:
        """Resident blocks from least to most recently used."""
        return list(self._resident)

    def reset_counters(self) -> None:
        self.hits = self.misses = self.prefetched_blocks = self.useful_prefetches = 0
        self._unused_prefetches.clear()

    def clear(self) -> None:
        self._resident.clear()
        self._unused_prefetches.clear()

    def _check(self, block: BlockId) -> None:
        if self._is_valid is not None and not self._is_valid(block):
            raise IntegrityError(f"Block {tuple(block)} is outside the database")

    def _insert(self, block: BlockId) -> None:
        self._resident[block] = None
        self._resident.move_to_end(block)
        while len(self._resident) > self.capacity:
            evicted, _ = self._resident.popitem(last=False)
            self._unused_prefetches.discard(evicted)

    def access(self, blocks: Iterable[BlockId], io: IoCostModel) -> AccessResult:
        ordered = sorted(set(blocks))
        for block in ordered:
            self._check(block)
        hits, missing = 0, []
        for block in ordered:
            if block in self._resident:
                hits += 1
                self._resident.move_to_end(block)
                if block in self._unused_prefetches:
                    self._unused_prefetches.discard(block)
                    self.useful_prefetches += 1
            else:
                missing.append(block)
        for block in missing:
            self._insert(block)
        self.hits += hits
        self.misses += len(missing)
        return AccessResult(hits, len(missing), io.charge(missing))

    def prefetch(self, blocks: Iterable[BlockId], io: IoCostModel | None = None) -> int:
        """Insert non-resident blocks in the given order; prefetches are neither hits nor misses."""
        fetched = []
        seen: set[BlockId] = set()
        for block in blocks:
            if block in seen:
                continue
            seen.add(block)
            self._check(block)
            if block in self._resident:
                self._resident.move_to_end(block)
                continue
            self._insert(block)
            self._unused_prefetches.add(block)
            fetched.append(block)
        self.prefetched_blocks += len(fetched)
        if io is not None:
            io.charge(fetched)
        return len(fetched)


def access_blocks(cache: CacheState, io: IoCostModel, res_b: Iterable[BlockId]) -> AccessResult:
    """Demand-access a query's blocks in ascending (table_id, block_no) order."""
    return cache.access(res_b, io)


def prefetch_blocks(cache: CacheState, blocks: Iterable[BlockId], io: IoCostModel | None = None) -> int:
    return cache.prefetch(blocks, io)


def prefetch_partitions(
    cache: CacheState, ps: PartitionSet, ids: Iterable[int], io: IoCostModel | None = None
) -> int:
    """Prefetch whole partitions in list order; returns blocks actually fetched."""
    blocks: list[BlockId] = []
    for pid in ids:
        blocks.extend(ps[pid].sorted_blocks())
    return cache.prefetch(blocks, io)
