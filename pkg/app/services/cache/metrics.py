"""Hit ratio, miss coverage and relative I/O, plus per-system accumulation."""

import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Iterator

from app.schemas import ReportRow


def hit_ratio(hits: int, misses: int) -> float:
    total = hits + misses
    return hits / total if total else 0.0


def coverage(misses_np: int, misses: int) -> float | None:
    """Share of the no-prefetch system's misses removed; negative when prefetching evicts useful blocks."""
    if misses_np <= 0:
        return None
    return (misses_np - misses) / misses_np


def relative_io(t_pr: float, t_np: float) -> float | None:
    if t_np <= 0:
        return None
    return t_pr / t_np


@dataclass
class StageTimings:
    """Wall-clock seconds spent in each stage of the learned system."""

    encode_seconds: float = 0.0
    partition_seconds: float = 0.0
    train_seconds: float = 0.0
    repartition_seconds: float = 0.0
    fine_tune_seconds: float = 0.0
    predict_seconds: float = 0.0

    @contextmanager
    def measure(self, stage: str) -> Iterator[None]:
        """Add the time spent inside the block to `<stage>_seconds`."""
        attr = f"{stage}_seconds"
        if not hasattr(self, attr):
            raise AttributeError(f"Unknown stage: {stage}")
        start_time = time.perf_counter()
        try:
            yield
        finally:
            setattr(self, attr, getattr(self, attr) + time.perf_counter() - start_time)


@dataclass
class MetricsAccumulator:
    """Test-segment counters of one system."""

    system: str
    workload: str
    k: int
    hits: int = 0
    misses: int = 0
    t_io: float = 0.0
    prefetched_blocks: int = 0
    useful_prefetches: int = 0
    prefetch_t_io: float = 0.0
    repartition_count: int = 0
    fine_tune_count: int = 0
    timings: StageTimings = field(default_factory=StageTimings)
    prefetch_seconds: float = 0.0

    def record_access(self, hits: int, misses: int, cost: float) -> None:
        self.hits += hits
        self.misses += misses
        self.t_io += cost

    @property
    def hit_ratio(self) -> float:
        return hit_ratio(self.hits, self.misses)

    def to_row(self, misses_np: int | None, t_io_np: float | None) -> ReportRow:
        """Build the report row against the NP reference counters."""
        return ReportRow(
            system=self.system,
            workload=self.workload,
            k=self.k,
            hits=self.hits,
            misses=self.misses,
            hit_ratio=self.hit_ratio,
            coverage=None if misses_np is None else coverage(misses_np, self.misses),
            t_io=self.t_io,
            relative_t_io=None if t_io_np is None else relative_io(self.t_io, t_io_np),
            prefetched_blocks=self.prefetched_blocks,
            useful_prefetches=self.useful_prefetches,
            prefetch_accuracy=(
                self.useful_prefetches / self.prefetched_blocks if self.prefetched_blocks else None
            ),
            prefetch_t_io=self.prefetch_t_io,
            repartition_count=self.repartition_count,
            fine_tune_count=self.fine_tune_count,
            prefetch_seconds=self.prefetch_seconds,
            **asdict(self.timings),
        )
