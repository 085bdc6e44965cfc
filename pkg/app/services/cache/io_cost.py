"""Seek/transfer I/O cost model standing in for disk timing."""

from dataclasses import dataclass
from typing import Iterable

from app.exceptions import ConfigurationError
from app.services.datastore import BlockId


def contiguous_runs(blocks: Iterable[BlockId]) -> list[list[BlockId]]:
    """Split blocks into maximal runs of consecutive block numbers within one table."""
    runs: list[list[BlockId]] = []
    for block in sorted(set(blocks)):
        if runs and runs[-1][-1].table_id == block.table_id and runs[-1][-1].block_no + 1 == block.block_no:
            runs[-1].append(block)
        else:
            runs.append([block])
    return runs


@dataclass
class IoCostModel:
    """Abstract cost units: seek_cost per contiguous run plus transfer_cost per block."""

    seek_cost: float = 10.0
    transfer_cost: float = 1.0
    total: float = 0.0

    def __post_init__(self) -> None:
        if self.seek_cost < 0 or self.transfer_cost < 0:
            raise ConfigurationError(
                f"I/O costs must be non-negative (seek={self.seek_cost}, transfer={self.transfer_cost})"
            )

    def cost(self, blocks: Iterable[BlockId]) -> float:
        runs = contiguous_runs(blocks)
        return len(runs) * self.seek_cost + sum(len(r) for r in runs) * self.transfer_cost

    def charge(self, blocks: Iterable[BlockId]) -> float:
        amount = self.cost(blocks)
        self.total += amount
        return amount


def io_cost(io: IoCostModel, miss_set: Iterable[BlockId]) -> float:
    return io.cost(miss_set)
