"""Result store and statistics for experiment runs."""

import json
from dataclasses import dataclass
from datetime import datetime

from loguru import logger
from sqlalchemy.orm import Session

from app.models import ExperimentRun, ReportRecord, RunKind, RunStatus
from app.schemas import ExperimentConfig, ReportRow


class RunStore:
    """Service for storing experiment runs and their report rows."""

    def __init__(self, db: Session):
        self.db = db

    def create_run(
        self,
        name: str,
        workload: str,
        systems: list[str],
        config: ExperimentConfig,
        kind: RunKind = RunKind.EXPERIMENT,
    ) -> ExperimentRun:
        run = ExperimentRun(
            name=name,
            kind=kind,
            status=RunStatus.PENDING,
            workload=workload,
            systems=",".join(systems),
            config_json=config.model_dump_json(),
        )
        self.db.add(run)
        self.db.commit()
        self.db.refresh(run)
        logger.info(f"Created experiment run #{run.id}: {name}")
        return run

    def update_status(
        self,
        run: ExperimentRun,
        status: RunStatus,
        error_log: str | None = None,
        commit: bool = True,
    ) -> None:
        """
        Update run status and its timestamps.

        Args:
            run: The run to update
            status: New status
            error_log: Error message (optional)
            commit: Whether to commit the transaction
        """
        old_status = run.status
        run.status = status
        if error_log is not None:
            run.error_log = error_log
        if status == RunStatus.RUNNING and run.started_at is None:
            run.started_at = datetime.utcnow()
        if status in (RunStatus.COMPLETED, RunStatus.FAILED):
            run.completed_at = datetime.utcnow()
        logger.debug(f"Run #{run.id} status: {old_status.value}→{status.value}")
        if commit:
            self.db.commit()

    def save_rows(self, run: ExperimentRun, rows: list[ReportRow], commit: bool = True) -> None:
        self.db.add_all([ReportRecord(run_id=run.id, **row.model_dump()) for row in rows])
        if commit:
            self.db.commit()


@dataclass
class RunSummary:
    """One line of the run listing."""

    run_id: int
    name: str
    kind: str
    status: str
    workload: str
    systems: str
    n_rows: int
    best_system: str | None
    best_hit_ratio: float | None
    duration_seconds: float | None


class RunStatistics:
    """Queries over stored runs."""

    def __init__(self, db: Session):
        self.db = db

    def list_runs(self, limit: int = 20) -> list[RunSummary]:
        runs = self.db.query(ExperimentRun).order_by(ExperimentRun.id.desc()).limit(limit).all()
        summaries = []
        for run in runs:
            best = max(run.rows, key=lambda r: r.hit_ratio, default=None)
            duration = None
            if run.started_at and run.completed_at:
                duration = round((run.completed_at - run.started_at).total_seconds(), 2)
            summaries.append(
                RunSummary(
                    run_id=run.id,
                    name=run.name,
                    kind=run.kind.value,
                    status=run.status.value,
                    workload=run.workload,
                    systems=run.systems,
                    n_rows=len(run.rows),
                    best_system=best.system if best else None,
                    best_hit_ratio=best.hit_ratio if best else None,
                    duration_seconds=duration,
                )
            )
        return summaries

    def get_rows(self, run_id: int) -> list[ReportRow]:
        """
        Report rows of a run, in insertion order.

        Raises:
            ValueError: Unknown run id
        """
        run = self.db.get(ExperimentRun, run_id)
        if not run:
            raise ValueError(f"Experiment run {run_id} not found")
        fields = ReportRow.model_fields
        return [
            ReportRow(**{name: getattr(record, name) for name in fields})
            for record in sorted(run.rows, key=lambda r: r.id)
        ]

    def get_config(self, run_id: int) -> ExperimentConfig | None:
        run = self.db.get(ExperimentRun, run_id)
        if not run or not run.config_json:
            return None
        return ExperimentConfig.model_validate(json.loads(run.config_json))
