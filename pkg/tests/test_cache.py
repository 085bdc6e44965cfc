"""Tests for the LRU cache, the I/O cost model and the evaluation metrics."""

import numpy as np
import pytest

from app.exceptions import ConfigurationError, IntegrityError
from app.services.cache import (
    CacheState,
    IoCostModel,
    MetricsAccumulator,
    StageTimings,
    access_blocks,
    contiguous_runs,
    coverage,
    hit_ratio,
    io_cost,
    prefetch_partitions,
    relative_io,
)
from app.services.datastore import BlockId
from app.services.partitioning import Partition, PartitionSet
from tests.conftest import blocks


class _ListLru:
    """Reference LRU: a plain list, most recent last."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.items: list[BlockId] = []

    def touch(self, block: BlockId) -> bool:
        hit = block in self.items
        if hit:
            self.items.remove(block)
        self.items.append(block)
        del self.items[:-self.capacity]
        return hit

    def prefetch(self, blocks: list[BlockId]) -> int:
        fetched = 0
        for block in dict.fromkeys(blocks):
            if block in self.items:
                self.items.remove(block)
            else:
                fetched += 1
            self.items.append(block)
            del self.items[:-self.capacity]
        return fetched


class TestCacheState:
    def test_cold_then_warm(self):
        cache, io = CacheState(16), IoCostModel()
        first = access_blocks(cache, io, blocks(0, *range(10)))
        second = access_blocks(cache, io, blocks(0, *range(10)))
        assert (first.hits, first.misses) == (0, 10)
        assert (second.hits, second.misses) == (10, 0)
        assert second.io_cost == 0.0

    def test_duplicates_count_once(self):
        cache = CacheState(4)
        result = cache.access([BlockId(0, 1), BlockId(0, 1)], IoCostModel())
        assert result.misses == 1

    def test_eviction_is_least_recent(self):
        cache, io = CacheState(2), IoCostModel()
        cache.access(blocks(0, 1), io)
        cache.access(blocks(0, 2), io)
        cache.access(blocks(0, 1), io)
        cache.access(blocks(0, 3), io)
        assert cache.resident() == [BlockId(0, 1), BlockId(0, 3)]

    def test_matches_reference_lru(self):
        rng = np.random.default_rng(99)
        cache, oracle, io = CacheState(8), _ListLru(8), IoCostModel()
        for step in range(10_000):
            if rng.random() < 0.3:
                batch = [BlockId(0, int(b)) for b in rng.integers(0, 20, size=int(rng.integers(1, 4)))]
                assert cache.prefetch(batch, io) == oracle.prefetch(batch), f"step {step}"
            else:
                block = BlockId(0, int(rng.integers(0, 20)))
                result = cache.access([block], io)
                assert result.hits == int(oracle.touch(block)), f"step {step}"
            assert cache.resident() == oracle.items, f"step {step}"

    def test_prefetch_overflow_keeps_last(self):
        cache = CacheState(5)
        fetched = cache.prefetch([BlockId(0, b) for b in range(8)])
        assert fetched == 8
        assert cache.resident() == [BlockId(0, b) for b in range(3, 8)]
        assert (cache.hits, cache.misses) == (0, 0)

    def test_prefetching_resident_blocks_refreshes_without_counting(self):
        cache, io = CacheState(3), IoCostModel()
        cache.access(blocks(0, 1, 2), io)
        assert cache.prefetch([BlockId(0, 1)], io) == 0
        assert cache.prefetched_blocks == 0
        assert cache.resident()[-1] == BlockId(0, 1)

    def test_useful_prefetch_counted_once(self):
        cache, io = CacheState(4), IoCostModel()
        cache.prefetch([BlockId(0, 5)], io)
        cache.access(blocks(0, 5), io)
        cache.access(blocks(0, 5), io)
        assert cache.useful_prefetches == 1
        assert cache.hits == 2

    def test_prefetch_charges_io(self):
        cache, io = CacheState(8), IoCostModel(seek_cost=10, transfer_cost=1)
        cache.prefetch([BlockId(0, 0), BlockId(0, 1)], io)
        assert io.total == 12.0

    def test_rejects_unknown_block(self, small_db):
        cache = CacheState(4, is_valid=small_db.contains)
        with pytest.raises(IntegrityError):
            cache.access(blocks(5, 0), IoCostModel())

    def test_capacity_bound(self):
        with pytest.raises(ConfigurationError):
            CacheState(0)

    def test_prefetch_partitions_in_list_order(self):
        ps = PartitionSet(
            [Partition(0, blocks(0, 0, 1)), Partition(1, blocks(0, 2, 3)), Partition(2, blocks(0, 4, 5))],
            2, 1.0, 10.0,
        )
        cache = CacheState(4)
        assert prefetch_partitions(cache, ps, [2, 0, 1]) == 6
        assert cache.resident() == [BlockId(0, 0), BlockId(0, 1), BlockId(0, 2), BlockId(0, 3)]


class TestIoCost:
    def test_contiguous_run(self):
        assert io_cost(IoCostModel(10, 1), blocks(0, *range(10))) == 20.0

    def test_scattered_blocks(self):
        assert io_cost(IoCostModel(10, 1), blocks(0, *range(0, 20, 2))) == 110.0

    def test_empty(self):
        assert io_cost(IoCostModel(10, 1), set()) == 0.0

    def test_runs_split_at_table_boundary(self):
        runs = contiguous_runs({BlockId(0, 3), BlockId(1, 4), BlockId(0, 4)})
        assert runs == [[BlockId(0, 3), BlockId(0, 4)], [BlockId(1, 4)]]

    def test_negative_costs(self):
        with pytest.raises(ConfigurationError):
            IoCostModel(seek_cost=-1.0)


class TestMetrics:
    def test_hit_ratio(self):
        assert hit_ratio(3, 1) == 0.75
        assert hit_ratio(0, 0) == 0.0

    @pytest.mark.parametrize(
        ("misses_np", "misses", "expected"),
        [(10, 2, 0.8), (10, 11, -0.1), (0, 0, None)],
    )
    def test_coverage(self, misses_np, misses, expected):
        result = coverage(misses_np, misses)
        if expected is None:
            assert result is None
        else:
            assert result == pytest.approx(expected)

    @pytest.mark.parametrize(("t_pr", "expected"), [(5.0, 1.0), (0.0, 0.0), (1.0, 0.2)])
    def test_relative_io(self, t_pr, expected):
        assert relative_io(t_pr, 5.0) == pytest.approx(expected)

    def test_relative_io_without_reference(self):
        assert relative_io(3.0, 0.0) is None

    def test_row_against_reference(self):
        acc = MetricsAccumulator("lookahead", "s-reg", 4)
        acc.record_access(hits=8, misses=2, cost=24.0)
        acc.prefetched_blocks, acc.useful_prefetches = 10, 5
        row = acc.to_row(misses_np=10, t_io_np=120.0)
        assert row.hit_ratio == 0.8
        assert row.coverage == pytest.approx(0.8)
        assert row.relative_t_io == pytest.approx(0.2)
        assert row.prefetch_accuracy == 0.5

    def test_row_carries_stage_timings(self):
        acc = MetricsAccumulator("semantic", "s-reg", 2)
        acc.record_access(hits=1, misses=1, cost=3.0)
        acc.timings = StageTimings(train_seconds=2.5, predict_seconds=0.25)
        acc.prefetch_seconds = 0.5
        row = acc.to_row(misses_np=2, t_io_np=6.0)
        assert (row.train_seconds, row.predict_seconds, row.prefetch_seconds) == (2.5, 0.25, 0.5)
        assert row.encode_seconds == 0.0


class TestStageTimings:
    def test_measure_accumulates(self):
        timings = StageTimings()
        with timings.measure("predict"):
            sum(range(1000))
        first = timings.predict_seconds
        with timings.measure("predict"):
            sum(range(1000))
        assert 0.0 < first < timings.predict_seconds
        assert timings.train_seconds == 0.0

    def test_measure_counts_failed_stages(self):
        timings = StageTimings()
        with pytest.raises(RuntimeError):
            with timings.measure("fine_tune"):
                raise RuntimeError("diverged")
        assert timings.fine_tune_seconds > 0.0

    def test_unknown_stage(self):
        with pytest.raises(AttributeError):
            with StageTimings().measure("prefetch"):
                pass
