"""Experiment orchestrator: replays one trace against every requested system."""

import copy
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from loguru import logger
from sqlalchemy.orm import Session

from app.exceptions import ConfigurationError
from app.models import ExperimentRun, RunKind, RunStatus
from app.schemas import ExperimentConfig, ReportRow
from app.services.cache import CacheState, IoCostModel, MetricsAccumulator
from app.services.datastore import Database, QueryTrace, validate_trace
from app.services.encoding import EncodingStore
from prefetchers import PrefetchContext, prefetcher_registry
from .run_store import RunStore
from .semantic_pipeline import SemanticPipeline

NO_PREFETCH = "np"
SEMANTIC = "semantic"


@dataclass
class ReplayResult:
    """Counters of one system replay plus its per-query demand series."""

    metrics: MetricsAccumulator
    per_query: list[tuple[int, int]] = field(default_factory=list)


def split_trace(trace: QueryTrace, train_fraction: float) -> tuple[QueryTrace, QueryTrace]:
    """First train_fraction of the queries train, the rest is the measured test segment."""
    n_train = int(len(trace) * train_fraction)
    if n_train < 1 or n_train >= len(trace):
        raise ConfigurationError(
            f"A {len(trace)}-query trace cannot be split {train_fraction:.0%} train / rest test"
        )
    return trace.slice(0, n_train), trace.slice(n_train)


class ExperimentOrchestrator:
    """Builds the learned pipeline once and replays systems over a shared trace."""

    def __init__(
        self,
        db: Database,
        config: ExperimentConfig,
        session: Session | None = None,
        encodings: EncodingStore | None = None,
        external_path: Path | None = None,
        progress_callback: Callable[[str, int, int], None] | None = None,
    ):
        self.db = db
        self.config = config
        self.session = session
        self.external_path = external_path
        self.progress_callback = progress_callback
        self._encodings = encodings
        self._pipelines: dict[str, SemanticPipeline] = {}
        self._store: RunStore | None = None

    @property
    def store(self) -> RunStore | None:
        if self._store is None and self.session is not None:
            self._store = RunStore(self.session)
        return self._store

    def pipeline_for(self, train: QueryTrace) -> SemanticPipeline:
        """Trained pipeline for a training prefix, built once per prefix."""
        key = train.checksum()
        if key not in self._pipelines:
            logger.info(f"Training semantic pipeline on {len(train)} queries")
            pipeline = SemanticPipeline.build(self.db, train, self.config, self._encodings, self.progress_callback)
            self._encodings = pipeline.encodings
            self._pipelines[key] = pipeline
        return self._pipelines[key]

    def check_systems(self, systems: list[str]) -> list[str]:
        """Validate names and put the no-prefetch reference first."""
        known = prefetcher_registry.names()
        unknown = [s for s in systems if s not in known]
        if unknown:
            raise ConfigurationError(f"Unknown systems {unknown}. Valid: {known}")
        if "external" in systems and self.external_path is None:
            raise ConfigurationError("The external system needs a candidate file")
        ordered = [NO_PREFETCH] + [s for s in dict.fromkeys(systems) if s != NO_PREFETCH]
        return ordered

    def replay(
        self,
        system: str,
        k: int,
        train: QueryTrace,
        test: QueryTrace,
        workload: str,
    ) -> ReplayResult:
        """
        Replay the test segment for one system with a cold cache.

        Args:
            system: Registered system name
            k: Partitions (or k x MaxParSize blocks) prefetched per query
            train: Training prefix (warms baselines, trains the learned system)
            test: Measured queries
            workload: Workload label for the report

        Returns:
            ReplayResult
        """
        prefetcher = prefetcher_registry.create(system)
        pipeline = copy.deepcopy(self.pipeline_for(train)) if system == SEMANTIC else None
        prefetcher.setup(
            PrefetchContext(
                db=self.db,
                config=self.config,
                k=k,
                train_trace=train,
                pipeline=pipeline,
                external_path=self.external_path,
            )
        )
        prefetcher.warm_up(train)

        cache = CacheState(self.config.cache_capacity_blocks, self.db.contains)
        demand_io = IoCostModel(self.config.seek_cost, self.config.transfer_cost)
        prefetch_io = IoCostModel(self.config.seek_cost, self.config.transfer_cost)
        metrics = MetricsAccumulator(system, workload, k if system != NO_PREFETCH else 0)
        result = ReplayResult(metrics)

        total = len(test)
        for i, record in enumerate(test, start=1):
            access = cache.access(record.accessed_blocks, demand_io)
            metrics.record_access(access.hits, access.misses, access.io_cost)
            result.per_query.append((access.hits, access.misses))
            prefetcher.observe(record)
            start_time = time.perf_counter()
            prefetcher.prefetch(cache, prefetch_io)
            metrics.prefetch_seconds += time.perf_counter() - start_time
            if self.progress_callback and (i % 50 == 0 or i == total):
                self.progress_callback(f"replay:{system}", i, total)

        metrics.prefetched_blocks = cache.prefetched_blocks
        metrics.useful_prefetches = cache.useful_prefetches
        metrics.prefetch_t_io = prefetch_io.total
        metrics.repartition_count = prefetcher.repartition_count
        metrics.fine_tune_count = prefetcher.fine_tune_count
        if prefetcher.stage_timings is not None:
            metrics.timings = copy.copy(prefetcher.stage_timings)
        logger.info(
            f"System {system} k={metrics.k}: hits={metrics.hits} misses={metrics.misses} "
            f"hit_ratio={metrics.hit_ratio:.4f} t_io={metrics.t_io:.1f} "
            f"prefetched={metrics.prefetched_blocks} repartitions={metrics.repartition_count} "
            f"prefetch_seconds={metrics.prefetch_seconds:.3f}"
        )
        return result

    def begin_run(self, name: str, workload: str, systems: list[str], kind: RunKind) -> ExperimentRun | None:
        if self.store is None:
            return None
        run = self.store.create_run(name, workload, systems, self.config, kind)
        run.database_fingerprint = self.db.fingerprint()
        self.store.update_status(run, RunStatus.RUNNING)
        return run

    def run_experiment(
        self,
        trace: QueryTrace,
        systems: list[str],
        ks: list[int] | None = None,
        workload: str = "trace",
        name: str | None = None,
    ) -> list[ReportRow]:
        """
        Replay a trace for every system (and every k) and build the report rows.

        Args:
            trace: Full trace; the first train_fraction trains, the rest is measured
            systems: System names; np always runs first as the reference
            ks: k values to sweep (default: config.k)
            workload: Workload label
            name: Run-store name

        Returns:
            ReportRow list: the np row (when requested) then one row per system and k
        """
        validate_trace(trace, self.db)
        ordered = self.check_systems(systems)
        ks = ks or [self.config.k]
        if any(k < 0 for k in ks):
            raise ConfigurationError(f"k must be non-negative, got {ks}")
        train, test = split_trace(trace, self.config.train_fraction)
        checksum = trace.checksum()
        logger.info(
            f"Experiment on {workload}: {len(train)} train / {len(test)} test queries, "
            f"trace checksum {checksum}, systems={ordered}, k={ks}"
        )

        run = self.begin_run(name or f"{workload} {','.join(ordered)}", workload, ordered, RunKind.EXPERIMENT)
        if run is not None:
            run.trace_checksum = checksum
            run.train_queries, run.test_queries = len(train), len(test)
        try:
            reference = self.replay(NO_PREFETCH, 0, train, test, workload).metrics
            rows: list[ReportRow] = []
            if NO_PREFETCH in systems:
                rows.append(reference.to_row(reference.misses, reference.t_io))
            for system in ordered[1:]:
                for k in ks:
                    metrics = self.replay(system, k, train, test, workload).metrics
                    rows.append(metrics.to_row(reference.misses, reference.t_io))
        except Exception as e:
            if run is not None:
                logger.error(f"Run #{run.id} failed: {e}")
                self.store.update_status(run, RunStatus.FAILED, error_log=str(e))
            raise

        if run is not None:
            self.store.save_rows(run, rows)
            self.store.update_status(run, RunStatus.COMPLETED)
            logger.info(f"Run #{run.id} completed with {len(rows)} rows")
        return rows
