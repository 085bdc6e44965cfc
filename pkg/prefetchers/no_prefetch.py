"""No-prefetch reference system: a plain LRU cache."""

from app.services.cache import CacheState, IoCostModel
from app.services.datastore import BlockId, QueryRecord, QueryTrace
from prefetchers.base import BasePrefetcher


class NoPrefetcher(BasePrefetcher):
    """Defines Misses_NP and t_io_NP for coverage and relative I/O."""

    @property
    def name(self) -> str:
        return "np"

    @property
    def display_name(self) -> str:
        return "No prefetch"

    def warm_up(self, trace: QueryTrace) -> None:
        pass

    def observe(self, record: QueryRecord) -> None:
        pass

    def candidates(self, budget: int) -> list[BlockId]:
        return []

    def prefetch(self, cache: CacheState, io: IoCostModel) -> int:
        return 0
