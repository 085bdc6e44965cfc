"""SQLAlchemy ORM models for the experiment run store."""

import enum
from datetime import datetime

from sqlalchemy import Column, DateTime, Enum, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import DeclarativeBase, relationship


class Base(DeclarativeBase):
    """Base class for all models."""

    pass


class RunStatus(str, enum.Enum):
    """Status of an experiment run."""

    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class RunKind(str, enum.Enum):
    """What an experiment run measured."""

    EXPERIMENT = "experiment"
    ADAPTIVITY = "adaptivity"


class ExperimentRun(Base):
    """One replay of a trace against a set of systems."""

    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    name = Column(String(200), nullable=False)
    kind = Column(Enum(RunKind), default=RunKind.EXPERIMENT, nullable=False)
    status = Column(Enum(RunStatus), default=RunStatus.PENDING, nullable=False, index=True)
    workload = Column(String(100), nullable=False)
    systems = Column(String(500), nullable=False)  # comma-separated system names
    database_fingerprint = Column(String(32), nullable=True)
    trace_checksum = Column(String(32), nullable=True)
    config_json = Column(Text, nullable=True)

    # Statistics
    train_queries = Column(Integer, default=0, nullable=False)
    test_queries = Column(Integer, default=0, nullable=False)

    # Timestamps
    started_at = Column(DateTime, nullable=True)
    completed_at = Column(DateTime, nullable=True)
    created_at = Column(DateTime, nullable=False, default=datetime.utcnow)

    error_log = Column(Text, nullable=True)

    rows = relationship("ReportRecord", back_populates="run", cascade="all, delete-orphan")

    def __repr__(self) -> str:
        return f"<ExperimentRun(id={self.id}, workload={self.workload}, status={self.status})>"


class ReportRecord(Base):
    """One report row of a run."""

    __tablename__ = "report_records"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id"), nullable=False, index=True)
    system = Column(String(50), nullable=False, index=True)
    workload = Column(String(100), nullable=False)
    k = Column(Integer, nullable=False)
    hits = Column(Integer, nullable=False)
    misses = Column(Integer, nullable=False)
    hit_ratio = Column(Float, nullable=False)
    coverage = Column(Float, nullable=True)  # NULL when the NP system had no misses
    t_io = Column(Float, nullable=False)
    relative_t_io = Column(Float, nullable=True)
    prefetched_blocks = Column(Integer, default=0, nullable=False)
    useful_prefetches = Column(Integer, default=0, nullable=False)
    prefetch_accuracy = Column(Float, nullable=True)
    prefetch_t_io = Column(Float, default=0.0, nullable=False)
    repartition_count = Column(Integer, default=0, nullable=False)
    fine_tune_count = Column(Integer, default=0, nullable=False)
    encode_seconds = Column(Float, default=0.0, nullable=False)
    partition_seconds = Column(Float, default=0.0, nullable=False)
    train_seconds = Column(Float, default=0.0, nullable=False)
    repartition_seconds = Column(Float, default=0.0, nullable=False)
    fine_tune_seconds = Column(Float, default=0.0, nullable=False)
    predict_seconds = Column(Float, default=0.0, nullable=False)
    prefetch_seconds = Column(Float, default=0.0, nullable=False)

    run = relationship("ExperimentRun", back_populates="rows")

    def __repr__(self) -> str:
        return f"<ReportRecord(run={self.run_id}, system={self.system}, k={self.k}, hit_ratio={self.hit_ratio:.4f})>"
