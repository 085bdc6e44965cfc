"""Shifting-workload scenario: windowed hit ratios across workload changes."""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from loguru import logger

from app.exceptions import ConfigurationError
from app.models import RunKind, RunStatus
from app.services.cache import hit_ratio
from app.services.datastore import DEFAULT_PROFILES, ShiftProfile, generate_shifting_workload
from .experiment_orchestrator import NO_PREFETCH, ExperimentOrchestrator


@dataclass
class AdaptivityResult:
    """Hit ratio per window of `window_queries` test queries, for every system."""

    window_queries: int
    batch_queries: int
    series: dict[str, list[float]] = field(default_factory=dict)

    @property
    def n_windows(self) -> int:
        return len(next(iter(self.series.values()), []))

    def batch_of(self, window: int) -> int:
        """1-based batch number of a window."""
        return window * self.window_queries // self.batch_queries + 1

    def batch_windows(self, system: str, batch: int) -> list[float]:
        return [v for w, v in enumerate(self.series[system]) if self.batch_of(w) == batch]

    def recovery(self, system: str, batch: int, l_p: int, tail: int = 5) -> tuple[float, float]:
        """(mean of the first ceil(l_p / window) windows, mean of the last `tail` windows) of a batch."""
        windows = self.batch_windows(system, batch)
        head = windows[: max(1, math.ceil(l_p / self.window_queries))]
        end = windows[-tail:]
        return sum(head) / len(head), sum(end) / len(end)

    def write_csv(self, path: str | Path) -> Path:
        """Columns window, start_query, batch, then one hit-ratio column per system."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        systems = list(self.series)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["window", "start_query", "batch", *systems])
            for w in range(self.n_windows):
                writer.writerow([
                    w,
                    w * self.window_queries,
                    self.batch_of(w),
                    *(repr(self.series[s][w]) for s in systems),
                ])
        return path


def windowed_hit_ratios(per_query: list[tuple[int, int]], window: int) -> list[float]:
    """Hit ratio over consecutive windows; a trailing partial window is dropped."""
    ratios = []
    for start in range(0, len(per_query) - window + 1, window):
        chunk = per_query[start:start + window]
        ratios.append(hit_ratio(sum(h for h, _ in chunk), sum(m for _, m in chunk)))
    return ratios


def run_adaptivity_scenario(
    orchestrator: ExperimentOrchestrator,
    systems: list[str],
    seed: int,
    profiles: tuple[ShiftProfile, ...] = DEFAULT_PROFILES,
) -> AdaptivityResult:
    """
    Replay the shifting workload and report windowed hit ratios.

    The warm-up prefix trains; the shifting batches are measured with a cold cache.

    Args:
        orchestrator: Orchestrator bound to a database with enough tables
        systems: Systems to compare; needs the learned system and at least one baseline
        seed: Workload seed
        profiles: One shift profile per batch

    Returns:
        AdaptivityResult, np included as the reference series
    """
    config = orchestrator.config
    if "semantic" not in systems or not any(s not in ("semantic", NO_PREFETCH) for s in systems):
        raise ConfigurationError("The adaptivity scenario compares semantic with at least one baseline")
    ordered = orchestrator.check_systems(systems)

    workload = generate_shifting_workload(
        orchestrator.db,
        n_active_tables=config.adaptivity_tables,
        batch_queries=config.adaptivity_batch_queries,
        warmup_queries=config.adaptivity_warmup_queries,
        seed=seed,
        spec=config.workload,
        profiles=profiles,
    )
    trace = workload.trace
    train = trace.slice(0, workload.warmup_queries)
    test = trace.slice(workload.warmup_queries)
    logger.info(
        f"Adaptivity scenario: {len(profiles)} batches x {workload.batch_queries} queries, "
        f"trace checksum {trace.checksum()}"
    )

    run = orchestrator.begin_run(f"adaptivity seed={seed}", "shifting", ordered, RunKind.ADAPTIVITY)
    result = AdaptivityResult(config.window_queries, workload.batch_queries)
    rows = []
    try:
        reference = None
        for system in ordered:
            replay = orchestrator.replay(system, config.k, train, test, "shifting")
            result.series[system] = windowed_hit_ratios(replay.per_query, config.window_queries)
            if reference is None:
                reference = replay.metrics
            if system in systems:
                rows.append(replay.metrics.to_row(reference.misses, reference.t_io))
    except Exception as e:
        if run is not None:
            orchestrator.store.update_status(run, RunStatus.FAILED, error_log=str(e))
        raise

    if run is not None:
        run.trace_checksum = trace.checksum()
        run.train_queries, run.test_queries = len(train), len(test)
        orchestrator.store.save_rows(run, rows)
        orchestrator.store.update_status(run, RunStatus.COMPLETED)
    return result
