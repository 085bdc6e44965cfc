"""Tests for the baseline prefetchers and the registry."""

import json

import pytest

from app.exceptions import ConfigurationError, TraceParseError
from app.services.cache import CacheState, IoCostModel
from app.services.datastore import BlockId, QueryRecord
from prefetchers import PrefetchContext, prefetcher_registry
from prefetchers.external import load_candidate_file
from prefetchers.lookahead import lookahead_candidates
from prefetchers.naive import DeltaHistogram, naive_candidates
from prefetchers.rand_readahead import ExtentWindow, rand_readahead_candidates
from tests.conftest import blocks, make_config


def _record(query_id: int, block_set: set[BlockId]) -> QueryRecord:
    return QueryRecord(query_id, query_id, frozenset(block_set))


class TestLookahead:
    def test_next_k_times_partition_size(self):
        assert lookahead_candidates(100, k=2, max_par_size=2, total_blocks=1000) == [101, 102, 103, 104]

    def test_clipped_at_database_end(self):
        assert lookahead_candidates(998, k=2, max_par_size=2, total_blocks=1000) == [999]

    def test_zero_k(self):
        assert lookahead_candidates(5, k=0, max_par_size=16, total_blocks=100) == []

    def test_prefetcher_follows_last_block(self, small_db, fast_config):
        prefetcher = prefetcher_registry.create("lookahead")
        prefetcher.setup(PrefetchContext(small_db, fast_config, k=1))
        assert prefetcher.candidates(4) == []
        prefetcher.observe(_record(0, blocks(0, 5, 6)))
        assert prefetcher.candidates(4) == sorted(blocks(0, 7, 8, 9, 10))

    def test_crosses_into_next_table(self, small_db, fast_config):
        prefetcher = prefetcher_registry.create("lookahead")
        prefetcher.setup(PrefetchContext(small_db, fast_config, k=1))
        prefetcher.observe(_record(0, blocks(0, 31)))
        assert prefetcher.candidates(2) == [BlockId(1, 0), BlockId(1, 1)]


class TestNaive:
    def test_repeats_dominant_delta(self):
        hist = DeltaHistogram()
        for delta in (1, 1, 1, 5):
            hist.add(delta)
        assert naive_candidates(hist, 100, n=3, total_blocks=1000) == [101, 102, 103]

    def test_empty_histogram(self):
        assert naive_candidates(DeltaHistogram(), 100, n=3, total_blocks=1000) == []

    def test_zero_delta_yields_nothing(self):
        hist = DeltaHistogram()
        hist.add(0)
        assert naive_candidates(hist, 100, n=3, total_blocks=1000) == []

    def test_tie_prefers_smaller_positive_delta(self):
        hist = DeltaHistogram()
        for delta in (-2, 2, 4, -2, 2, 4):
            hist.add(delta)
        assert hist.dominant() == 2

    def test_stops_at_address_space_end(self):
        hist = DeltaHistogram()
        hist.add(4)
        assert naive_candidates(hist, 990, n=5, total_blocks=1000) == [994, 998]

    def test_prefetcher_counts_suppressions(self, small_db, fast_config):
        prefetcher = prefetcher_registry.create("naive")
        prefetcher.setup(PrefetchContext(small_db, fast_config, k=1))
        prefetcher.observe(_record(0, blocks(0, 3)))
        prefetcher.observe(_record(1, blocks(0, 3)))
        assert prefetcher.candidates(4) == []
        assert prefetcher.zero_delta_suppressions == 1


class TestRandReadahead:
    def test_threshold_triggers_whole_extent(self):
        window = ExtentWindow(window=64, extent_size=32, threshold=13)
        extents = rand_readahead_candidates(window, range(13))
        assert extents == [list(range(32))]

    def test_below_threshold(self):
        window = ExtentWindow(window=64, extent_size=32, threshold=13)
        assert rand_readahead_candidates(window, range(12)) == []

    def test_spread_demands_do_not_trigger(self):
        window = ExtentWindow(window=64, extent_size=32, threshold=13)
        assert rand_readahead_candidates(window, [32 * i for i in range(13)]) == []

    def test_fires_once_while_above_threshold(self):
        window = ExtentWindow(window=64, extent_size=32, threshold=13)
        rand_readahead_candidates(window, range(13))
        assert rand_readahead_candidates(window, [13, 14]) == []

    def test_repeated_lba_counts_once(self):
        window = ExtentWindow(window=64, extent_size=32, threshold=13)
        assert rand_readahead_candidates(window, [5] * 20) == []

    def test_origin_shifts_alignment(self):
        window = ExtentWindow(window=64, extent_size=4, threshold=2, origin=2)
        assert rand_readahead_candidates(window, [2, 3]) == [[2, 3, 4, 5]]

    def test_invalid_window(self):
        with pytest.raises(ConfigurationError):
            ExtentWindow(window=0, extent_size=4, threshold=1)

    def test_prefetcher_fetches_whole_extent_beyond_budget(self, small_db):
        config = make_config(max_par_size=4, rr_extent_factor=4, rr_threshold=2, rr_window=8)
        prefetcher = prefetcher_registry.create("rand-readahead")
        prefetcher.setup(PrefetchContext(small_db, config, k=1))
        prefetcher.observe(_record(0, blocks(0, 3, 4)))
        cache = CacheState(32)
        assert prefetcher.prefetch(cache, IoCostModel()) == 16
        assert cache.resident() == sorted(blocks(0, *range(16)))
        assert prefetcher.prefetch(cache, IoCostModel()) == 0


class TestPrefetchContext:
    def test_budget_follows_the_replayed_k(self, small_db):
        config = make_config(k=2, max_par_size=4)
        assert PrefetchContext(small_db, config, k=5).budget_blocks == 20
        assert PrefetchContext(small_db, config, k=0).budget_blocks == 0


class TestRegistry:
    def test_known_systems(self):
        assert prefetcher_registry.names() == [
            "external", "lookahead", "naive", "np", "rand-readahead", "semantic",
        ]

    def test_unknown_system(self):
        with pytest.raises(ConfigurationError):
            prefetcher_registry.create("sgdp")

    def test_fresh_instance_per_create(self):
        assert prefetcher_registry.create("naive") is not prefetcher_registry.create("naive")

    def test_no_prefetch_never_fetches(self, small_db, fast_config):
        prefetcher = prefetcher_registry.create("np")
        prefetcher.setup(PrefetchContext(small_db, fast_config, k=4))
        prefetcher.observe(_record(0, blocks(0, 1)))
        assert prefetcher.prefetch(CacheState(8), IoCostModel()) == 0


class TestExternal:
    def test_replays_listed_candidates(self, small_db, fast_config, tmp_path):
        path = tmp_path / "candidates.jsonl"
        path.write_text(
            json.dumps({"q": 0, "b": [[0, 4], [0, 4], [9, 9], [1, 2]]}) + "\n"
            + json.dumps({"q": 1, "b": []}) + "\n"
        )
        prefetcher = prefetcher_registry.create("external")
        prefetcher.setup(PrefetchContext(small_db, fast_config, k=1, external_path=path))
        prefetcher.observe(_record(0, blocks(0, 1)))
        assert prefetcher.candidates(8) == [BlockId(0, 4), BlockId(1, 2)]
        prefetcher.observe(_record(1, blocks(0, 1)))
        assert prefetcher.candidates(8) == []

    def test_needs_a_file(self, small_db, fast_config):
        with pytest.raises(ConfigurationError):
            prefetcher_registry.create("external").setup(PrefetchContext(small_db, fast_config, k=1))

    def test_bad_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"q": "zero"}\n')
        with pytest.raises(TraceParseError):
            load_candidate_file(path)

    @pytest.mark.parametrize("line", ['{"q": true, "b": []}', '{"q": 0, "b": [[0, false]]}'])
    def test_boolean_ids(self, tmp_path, line):
        path = tmp_path / "bool.jsonl"
        path.write_text(line + "\n")
        with pytest.raises(TraceParseError):
            load_candidate_file(path)
