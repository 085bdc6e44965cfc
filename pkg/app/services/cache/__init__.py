"""LRU cache engine, I/O cost model and evaluation metrics."""

from .io_cost import IoCostModel, contiguous_runs, io_cost
from .lru_cache import (
    AccessResult,
    CacheState,
    access_blocks,
    prefetch_blocks,
    prefetch_partitions,
)
from .metrics import MetricsAccumulator, StageTimings, coverage, hit_ratio, relative_io

__all__ = [
    "AccessResult",
    "CacheState",
    "IoCostModel",
    "MetricsAccumulator",
    "StageTimings",
    "access_blocks",
    "contiguous_runs",
    "coverage",
    "hit_ratio",
    "io_cost",
    "prefetch_blocks",
    "prefetch_partitions",
    "relative_io",
]
