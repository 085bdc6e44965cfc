"""Random readahead: fetch a whole extent once enough of it shows up in a window of demands."""

from collections import Counter, deque
from typing import Iterable

from app.exceptions import ConfigurationError
from app.services.cache import CacheState, IoCostModel
from app.services.datastore import BlockId, QueryRecord
from prefetchers.base import LbaPrefetcher


class ExtentWindow:
    """Sliding window of recent demanded LBAs over aligned fixed-size extents."""

    def __init__(self, window: int, extent_size: int, threshold: int, origin: int = 0):
        if window < 1 or extent_size < 1 or threshold < 1:
            raise ConfigurationError(
                f"Invalid readahead window={window} extent={extent_size} threshold={threshold}"
            )
        self.window = window
        self.extent_size = extent_size
        self.threshold = threshold
        self.origin = origin
        self._recent: deque[int] = deque()
        self._lba_counts: Counter[int] = Counter()
        self._fired: set[int] = set()

    def extent_of(self, lba: int) -> int:
        return (lba - self.origin) // self.extent_size

    def extent_lbas(self, extent: int) -> list[int]:
        start = self.origin + extent * self.extent_size
        return list(range(start, start + self.extent_size))

    def distinct_in_extent(self, extent: int) -> int:
        return sum(1 for lba in self._lba_counts if self.extent_of(lba) == extent)

    def push(self, lba: int) -> None:
        self._recent.append(lba)
        self._lba_counts[lba] += 1
        while len(self._recent) > self.window:
            old = self._recent.popleft()
            self._lba_counts[old] -= 1
            if self._lba_counts[old] == 0:
                del self._lba_counts[old]

    def triggered(self) -> list[int]:
        """Extents crossing the threshold that have not fired since they last dropped below it."""
        per_extent: Counter[int] = Counter(self.extent_of(lba) for lba in self._lba_counts)
        self._fired &= {e for e, n in per_extent.items() if n >= self.threshold}
        fire = sorted(e for e, n in per_extent.items() if n >= self.threshold and e not in self._fired)
        self._fired.update(fire)
        return fire


def rand_readahead_candidates(window: ExtentWindow, new_demands: Iterable[int]) -> list[list[int]]:
    """Push the demands, then return the full LBA list of every newly triggered extent."""
    for lba in new_demands:
        window.push(lba)
    return [window.extent_lbas(e) for e in window.triggered()]


class RandReadaheadPrefetcher(LbaPrefetcher):
    @property
    def name(self) -> str:
        return "rand-readahead"

    @property
    def display_name(self) -> str:
        return "Random readahead"

    def setup(self, context) -> None:
        super().setup(context)
        config = context.config
        self.window = ExtentWindow(
            window=config.rr_window,
            extent_size=config.rr_extent_factor * config.max_par_size,
            threshold=config.rr_threshold,
            origin=config.rr_extent_origin,
        )
        self._pending: list[int] = []

    def observe(self, record: QueryRecord) -> None:
        for extent in rand_readahead_candidates(self.window, self.demanded_lbas(record)):
            self._pending.extend(extent)

    def warm_up(self, trace) -> None:
        super().warm_up(trace)
        self._pending = []

    def candidates(self, budget: int) -> list[BlockId]:
        blocks = self.to_blocks(self._pending, budget)
        self._pending = []
        return blocks

    def prefetch(self, cache: CacheState, io: IoCostModel) -> int:
        """Fetch every triggered extent whole; k does not cut an extent short."""
        return cache.prefetch(self.candidates(len(self._pending)), io)
