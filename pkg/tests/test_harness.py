"""Tests for the replay orchestrator, the learned pipeline, reports and the run store."""

import pytest

from app.exceptions import ConfigurationError
from app.models import RunStatus
from app.schemas import TIMING_FIELDS, ReportRow, WorkloadSpec
from app.services.datastore import generate_sql_workload
from app.services.harness import (
    REPORT_COLUMNS,
    TIMED_REPORT_COLUMNS,
    AdaptivityResult,
    ExperimentOrchestrator,
    RunStatistics,
    SemanticPipeline,
    emit_report,
    read_report,
    split_trace,
    windowed_hit_ratios,
)
from tests.conftest import blocks, make_config, make_trace


@pytest.fixture
def s_reg_trace(small_db):
    return generate_sql_workload(small_db, "s-reg", 100, seed=0, spec=WorkloadSpec(range_width=2))


def _row(system: str, **overrides) -> ReportRow:
    values = dict(system=system, workload="s-reg", k=2, hits=8, misses=2, hit_ratio=0.8, coverage=0.5,
                  t_io=24.0, relative_t_io=0.25)
    values.update(overrides)
    return ReportRow(**values)


class TestSplitTrace:
    def test_fraction(self, s_reg_trace):
        train, test = split_trace(s_reg_trace, 0.8)
        assert (len(train), len(test)) == (80, 20)
        assert test[0].query_id == 80

    @pytest.mark.parametrize("fraction", [0.001, 0.999])
    def test_empty_side(self, s_reg_trace, fraction):
        with pytest.raises(ConfigurationError):
            split_trace(s_reg_trace, fraction)


class TestOrchestrator:
    def test_no_prefetch_row_is_its_own_reference(self, small_db, fast_config, s_reg_trace):
        rows = ExperimentOrchestrator(small_db, fast_config).run_experiment(s_reg_trace, ["np"], workload="s-reg")
        assert len(rows) == 1
        row = rows[0]
        assert (row.system, row.k) == ("np", 0)
        assert row.misses > 0
        assert row.coverage == 0.0
        assert row.relative_t_io == 1.0
        assert row.prefetched_blocks == 0

    def test_baselines_only_report_requested_systems(self, small_db, fast_config, s_reg_trace):
        rows = ExperimentOrchestrator(small_db, fast_config).run_experiment(
            s_reg_trace, ["lookahead", "naive"], ks=[1, 2], workload="s-reg"
        )
        assert [(r.system, r.k) for r in rows] == [
            ("lookahead", 1), ("lookahead", 2), ("naive", 1), ("naive", 2),
        ]

    def test_lookahead_helps_a_sequential_scan(self, small_db, fast_config, s_reg_trace):
        rows = ExperimentOrchestrator(small_db, fast_config).run_experiment(
            s_reg_trace, ["np", "lookahead"], workload="s-reg"
        )
        np_row, lookahead = rows
        assert lookahead.hit_ratio > np_row.hit_ratio
        assert lookahead.coverage > 0

    def test_runs_are_deterministic(self, small_db, s_reg_trace):
        config = make_config(l_p=5, max_epochs=2)
        first = ExperimentOrchestrator(small_db, config).run_experiment(s_reg_trace, ["np", "semantic", "naive"])
        second = ExperimentOrchestrator(small_db, config).run_experiment(s_reg_trace, ["np", "semantic", "naive"])
        untimed = set(TIMING_FIELDS)
        assert [r.model_dump(exclude=untimed) for r in first] == [r.model_dump(exclude=untimed) for r in second]

    def test_stage_timings_are_recorded(self, small_db, s_reg_trace):
        config = make_config(l_p=5, max_epochs=2)
        rows = ExperimentOrchestrator(small_db, config).run_experiment(s_reg_trace, ["np", "lookahead", "semantic"])
        for row in rows:
            assert all(getattr(row, name) >= 0.0 for name in TIMING_FIELDS)
        by_system = {row.system: row for row in rows}
        semantic = by_system["semantic"]
        assert all(getattr(semantic, name) > 0.0 for name in TIMING_FIELDS)
        assert by_system["lookahead"].prefetch_seconds > 0.0
        for name in ("encode_seconds", "partition_seconds", "train_seconds", "repartition_seconds",
                     "fine_tune_seconds", "predict_seconds"):
            assert getattr(by_system["lookahead"], name) == 0.0
            assert getattr(by_system["np"], name) == 0.0

    def test_semantic_repartitions_every_l_p_test_queries(self, small_db, s_reg_trace):
        config = make_config(l_p=5, max_epochs=2)
        rows = ExperimentOrchestrator(small_db, config).run_experiment(s_reg_trace, ["semantic"])
        semantic = rows[0]
        assert semantic.system == "semantic"
        assert semantic.repartition_count == 4
        assert semantic.fine_tune_count == 4

    def test_pipeline_is_built_once_per_prefix(self, small_db, s_reg_trace):
        orchestrator = ExperimentOrchestrator(small_db, make_config(max_epochs=1))
        train, _ = split_trace(s_reg_trace, 0.8)
        assert orchestrator.pipeline_for(train) is orchestrator.pipeline_for(train)

    def test_unknown_system(self, small_db, fast_config, s_reg_trace):
        with pytest.raises(ConfigurationError):
            ExperimentOrchestrator(small_db, fast_config).run_experiment(s_reg_trace, ["sgdp"])

    def test_external_needs_candidates(self, small_db, fast_config, s_reg_trace):
        with pytest.raises(ConfigurationError):
            ExperimentOrchestrator(small_db, fast_config).run_experiment(s_reg_trace, ["external"])

    def test_trace_outside_database(self, small_db, fast_config):
        trace = make_trace([blocks(7, 0)] * 10)
        with pytest.raises(ValueError):
            ExperimentOrchestrator(small_db, fast_config).run_experiment(trace, ["np"])


class TestSemanticPipeline:
    def test_build_and_predict(self, small_db, s_reg_trace):
        config = make_config(max_epochs=1, l_p=20)
        train, test = split_trace(s_reg_trace, 0.8)
        pipeline = SemanticPipeline.build(small_db, train, config)
        assert pipeline.partition_matrices.shape == (
            pipeline.partitions.n_partitions, small_db.n_tables, config.l_be,
        )
        predicted = pipeline.predict(config.k)
        assert len(predicted) == config.k
        assert all(0 <= pid < pipeline.partitions.n_partitions for pid in predicted)
        assert pipeline.repartition_count == 0

        for record in test.records[:20]:
            pipeline.observe(record)
        assert pipeline.repartition_count == 1
        assert pipeline.queries_since_repartition == 0

    def test_build_and_replay_stages_are_timed(self, small_db, s_reg_trace):
        config = make_config(max_epochs=1, l_p=20)
        train, test = split_trace(s_reg_trace, 0.8)
        pipeline = SemanticPipeline.build(small_db, train, config)
        timings = pipeline.timings
        assert timings.encode_seconds > 0.0
        assert timings.partition_seconds > 0.0
        assert timings.train_seconds > 0.0
        assert (timings.repartition_seconds, timings.fine_tune_seconds, timings.predict_seconds) == (0.0, 0.0, 0.0)

        pipeline.predict(config.k)
        for record in test.records[:20]:
            pipeline.observe(record)
        assert timings.predict_seconds > 0.0
        assert timings.repartition_seconds > 0.0
        assert timings.fine_tune_seconds > 0.0

    def test_precomputed_encodings_cost_no_encode_time(self, small_db, s_reg_trace):
        config = make_config(max_epochs=1)
        train, _ = split_trace(s_reg_trace, 0.8)
        first = SemanticPipeline.build(small_db, train, config)
        second = SemanticPipeline.build(small_db, train, config, encodings=first.encodings)
        assert second.timings.encode_seconds == 0.0
        assert second.timings.train_seconds > 0.0


class TestWindows:
    def test_windowed_hit_ratios(self):
        per_query = [(1, 1), (2, 0), (0, 2), (1, 0), (5, 5)]
        assert windowed_hit_ratios(per_query, 2) == [0.75, pytest.approx(1 / 3)]

    def test_batches_and_recovery(self):
        result = AdaptivityResult(window_queries=10, batch_queries=40)
        result.series["semantic"] = [0.1, 0.2, 0.3, 0.4, 0.2, 0.6, 0.8, 0.8]
        assert [result.batch_of(w) for w in range(8)] == [1, 1, 1, 1, 2, 2, 2, 2]
        start, end = result.recovery("semantic", batch=2, l_p=10, tail=2)
        assert start == pytest.approx(0.2)
        assert end == pytest.approx(0.8)

    def test_csv(self, tmp_path):
        result = AdaptivityResult(window_queries=10, batch_queries=20)
        result.series = {"np": [0.1, 0.2], "semantic": [0.3, 0.4]}
        lines = result.write_csv(tmp_path / "adaptivity.csv").read_text().splitlines()
        assert lines[0] == "window,start_query,batch,np,semantic"
        assert lines[2].startswith("1,10,1,")


class TestReports:
    @pytest.mark.parametrize("suffix", ["csv", "json"])
    def test_roundtrip(self, tmp_path, suffix):
        rows = [_row("np", k=0, coverage=0.0, relative_t_io=1.0), _row("naive", prefetch_accuracy=None)]
        path = emit_report(rows, tmp_path / f"report.{suffix}")
        assert read_report(path) == rows

    def test_csv_header_order(self, tmp_path):
        path = emit_report([_row("np")], tmp_path / "report.csv")
        assert path.read_text().splitlines()[0] == ",".join(REPORT_COLUMNS)
        assert REPORT_COLUMNS[:4] == ["system", "workload", "k", "hits"]
        assert not set(TIMING_FIELDS) & set(REPORT_COLUMNS)

    @pytest.mark.parametrize("suffix", ["csv", "json"])
    def test_timings_roundtrip_on_request(self, tmp_path, suffix):
        rows = [_row("semantic", train_seconds=1.25, predict_seconds=0.5, prefetch_seconds=0.75)]
        path = emit_report(rows, tmp_path / f"report.{suffix}", include_timings=True)
        assert read_report(path) == rows
        if suffix == "csv":
            assert path.read_text().splitlines()[0] == ",".join(TIMED_REPORT_COLUMNS)

    def test_timings_left_out_by_default(self, tmp_path):
        rows = [_row("semantic", train_seconds=1.25)]
        path = emit_report(rows, tmp_path / "report.json")
        assert "train_seconds" not in path.read_text()
        assert read_report(path)[0].train_seconds == 0.0

    def test_empty_rows(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_report([], tmp_path / "report.csv")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_report([_row("np")], tmp_path / "report.xlsx")


class TestRunStore:
    def test_completed_run_is_listed(self, small_db, fast_config, s_reg_trace, db_session):
        orchestrator = ExperimentOrchestrator(small_db, fast_config, session=db_session)
        rows = orchestrator.run_experiment(s_reg_trace, ["np", "lookahead"], workload="s-reg", name="smoke")

        stats = RunStatistics(db_session)
        [summary] = stats.list_runs()
        assert summary.name == "smoke"
        assert summary.status == RunStatus.COMPLETED.value
        assert summary.n_rows == 2
        assert summary.best_system == "lookahead"
        assert stats.get_rows(summary.run_id) == rows
        assert stats.get_config(summary.run_id) == fast_config

    def test_stage_timings_are_persisted(self, small_db, s_reg_trace, db_session):
        config = make_config(l_p=5, max_epochs=1)
        orchestrator = ExperimentOrchestrator(small_db, config, session=db_session)
        rows = orchestrator.run_experiment(s_reg_trace, ["semantic"], workload="s-reg")

        stats = RunStatistics(db_session)
        [summary] = stats.list_runs()
        [stored] = stats.get_rows(summary.run_id)
        assert stored == rows[0]
        assert stored.train_seconds > 0.0
        assert stored.prefetch_seconds > 0.0

    def test_failed_run_is_marked(self, small_db, fast_config, db_session, tmp_path):
        trace = make_trace([blocks(0, i) for i in range(10)])
        missing = tmp_path / "missing.jsonl"
        orchestrator = ExperimentOrchestrator(small_db, fast_config, session=db_session, external_path=missing)
        with pytest.raises(OSError):
            orchestrator.run_experiment(trace, ["external"], name="broken")
        [summary] = RunStatistics(db_session).list_runs()
        assert summary.status == RunStatus.FAILED.value

    def test_unknown_run(self, db_session):
        with pytest.raises(ValueError):
            RunStatistics(db_session).get_rows(42)
