"""Sequential lookahead, widened to k x MaxParSize blocks."""

from app.services.datastore import BlockId, QueryRecord
from prefetchers.base import LbaPrefetcher


def lookahead_candidates(last_lba: int, k: int, max_par_size: int, total_blocks: int) -> list[int]:
    """The k * MaxParSize LBAs right after last_lba, clipped at the end of the database."""
    end = min(total_blocks, last_lba + 1 + k * max_par_size)
    return list(range(last_lba + 1, end))


class LookaheadPrefetcher(LbaPrefetcher):
    @property
    def name(self) -> str:
        return "lookahead"

    @property
    def display_name(self) -> str:
        return "Lookahead"

    def observe(self, record: QueryRecord) -> None:
        lbas = self.demanded_lbas(record)
        if lbas:
            self.last_lba = lbas[-1]

    def candidates(self, budget: int) -> list[BlockId]:
        if self.last_lba is None:
            return []
        lbas = lookahead_candidates(
            self.last_lba,
            self.context.k,
            self.context.config.max_par_size,
            self.address_space.total_blocks,
        )
        return self.to_blocks(lbas, budget)
