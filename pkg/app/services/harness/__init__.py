"""Experiment harness: the learned pipeline, replay orchestration, reports and the run store."""

from .adaptivity import AdaptivityResult, run_adaptivity_scenario, windowed_hit_ratios
from .experiment_orchestrator import (
    NO_PREFETCH,
    SEMANTIC,
    ExperimentOrchestrator,
    ReplayResult,
    split_trace,
)
from .report_writer import REPORT_COLUMNS, TIMED_REPORT_COLUMNS, ReportFormat, emit_report, read_report
from .run_store import RunStatistics, RunStore, RunSummary
from .semantic_pipeline import SemanticPipeline

__all__ = [
    "AdaptivityResult",
    "ExperimentOrchestrator",
    "NO_PREFETCH",
    "REPORT_COLUMNS",
    "ReplayResult",
    "ReportFormat",
    "RunStatistics",
    "RunStore",
    "RunSummary",
    "SEMANTIC",
    "SemanticPipeline",
    "TIMED_REPORT_COLUMNS",
    "emit_report",
    "read_report",
    "run_adaptivity_scenario",
    "split_trace",
    "windowed_hit_ratios",
]
