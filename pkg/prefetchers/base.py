"""Base prefetcher abstract class and the replay context handed to it."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from app.schemas import ExperimentConfig
from app.services.cache import CacheState, IoCostModel, StageTimings
from app.services.datastore import BlockId, Database, QueryRecord, QueryTrace


@dataclass
class PrefetchContext:
    """Everything a prefetcher may read while it is set up for one replay."""

    db: Database
    config: ExperimentConfig
    k: int
    train_trace: QueryTrace | None = None
    pipeline: Any = None
    external_path: Path | None = None

    @property
    def budget_blocks(self) -> int:
        """Blocks a block-level prefetcher may fetch per query (k x MaxParSize)."""
        return self.k * self.config.max_par_size


class BasePrefetcher(ABC):
    """
    Abstract base class for all prefetchers.

    The replay loop calls observe() with each completed query, then
    prefetch(), which by default fetches candidates(budget) into the cache.
    Instances carry per-replay state, so the registry hands out a fresh one
    per system run.
    """

    context: PrefetchContext

    @property
    @abstractmethod
    def name(self) -> str:
        """System name used in reports and on the command line."""
        pass

    @property
    def display_name(self) -> str:
        return self.name

    def setup(self, context: PrefetchContext) -> None:
        """Bind to a database and configuration. Override to build state."""
        self.context = context

    def warm_up(self, trace: QueryTrace) -> None:
        """Observe the training prefix without prefetching."""
        for record in trace:
            self.observe(record)

    @abstractmethod
    def observe(self, record: QueryRecord) -> None:
        """Feed one completed query."""
        pass

    @abstractmethod
    def candidates(self, budget: int) -> list[BlockId]:
        """
        Blocks to prefetch before the next query.

        Args:
            budget: Maximum number of blocks

        Returns:
            Ordered, duplicate-free block list of at most `budget` blocks.
        """
        pass

    def prefetch(self, cache: CacheState, io: IoCostModel) -> int:
        return cache.prefetch(self.candidates(self.context.budget_blocks), io)

    @property
    def repartition_count(self) -> int:
        return 0

    @property
    def fine_tune_count(self) -> int:
        return 0

    @property
    def stage_timings(self) -> StageTimings | None:
        """Per-stage wall-clock seconds of a learned system; None for the baselines."""
        return None


class LbaPrefetcher(BasePrefetcher):
    """Base for the traditional prefetchers working on the linear LBA space."""

    last_lba: int | None = None

    def setup(self, context: PrefetchContext) -> None:
        super().setup(context)
        self.address_space = context.db.address_space
        self.last_lba = None

    def demanded_lbas(self, record: QueryRecord) -> list[int]:
        """LBAs of the query's blocks in demand order."""
        return [self.address_space.lba(b) for b in record.sorted_blocks()]

    def to_blocks(self, lbas: list[int], budget: int) -> list[BlockId]:
        seen: set[int] = set()
        blocks = []
        for lba in lbas:
            if len(blocks) >= budget:
                break
            if lba in seen or not self.address_space.is_valid_lba(lba):
                continue
            seen.add(lba)
            blocks.append(self.address_space.block_of(lba))
        return blocks
