"""Naive delta prefetcher: repeatedly add the most frequent LBA-delta."""

from collections import Counter

from loguru import logger

from app.services.datastore import BlockId, QueryRecord
from prefetchers.base import LbaPrefetcher


class DeltaHistogram:
    """Counts of deltas between consecutive demanded LBAs."""

    def __init__(self):
        self.counts: Counter[int] = Counter()

    def __len__(self) -> int:
        return len(self.counts)

    def add(self, delta: int) -> None:
        self.counts[delta] += 1

    def dominant(self) -> int | None:
        """Most frequent delta; ties go to the smaller |d|, then the positive one."""
        if not self.counts:
            return None
        return min(self.counts, key=lambda d: (-self.counts[d], abs(d), d < 0))


def naive_candidates(hist: DeltaHistogram, last_lba: int, n: int, total_blocks: int) -> list[int]:
    """last + d*, last + 2d*, ... while inside the address space; nothing for d* = 0."""
    delta = hist.dominant()
    if delta is None or delta == 0 or n <= 0:
        return []
    lbas = []
    lba = last_lba
    for _ in range(n):
        lba += delta
        if not 0 <= lba < total_blocks:
            break
        lbas.append(lba)
    return lbas


class NaivePrefetcher(LbaPrefetcher):
    @property
    def name(self) -> str:
        return "naive"

    @property
    def display_name(self) -> str:
        return "Naive"

    def setup(self, context) -> None:
        super().setup(context)
        self.histogram = DeltaHistogram()
        self.zero_delta_suppressions = 0

    def observe(self, record: QueryRecord) -> None:
        for lba in self.demanded_lbas(record):
            if self.last_lba is not None:
                self.histogram.add(lba - self.last_lba)
            self.last_lba = lba

    def candidates(self, budget: int) -> list[BlockId]:
        if self.last_lba is None:
            return []
        if self.histogram.dominant() == 0:
            self.zero_delta_suppressions += 1
            logger.debug("Naive prefetcher: dominant delta is 0, no candidates")
            return []
        lbas = naive_candidates(self.histogram, self.last_lba, budget, self.address_space.total_blocks)
        return self.to_blocks(lbas, budget)
