"""Pydantic V2 schemas for database specs, workload knobs and experiment configuration."""

from datetime import datetime
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ColumnKind(str, Enum):
    """Kind of a table column."""

    NUMERIC = "numeric"
    TEXT = "text"
    DATETIME = "datetime"


class ColumnDistribution(str, Enum):
    """How the generator draws a column."""

    UNIFORM = "uniform"
    SEQUENTIAL = "sequential"  # clustered key: grows with row position


class WorkloadCategory(str, Enum):
    """SQL workload categories."""

    S_REG = "s-reg"
    S_RAND = "s-rand"
    M_REG = "m-reg"
    M_RAND = "m-rand"
    MJ_REG = "mj-reg"
    MJ_RAND = "mj-rand"
    FULL = "full"


class NavigationMode(str, Enum):
    """Navigational (pan/zoom) workload modes."""

    SMOOTH = "smooth"
    JUMPING = "jumping"
    RANDOM = "random"


class ColumnSpec(BaseModel):
    """One column of a generated table."""

    name: str
    kind: ColumnKind = ColumnKind.NUMERIC
    distribution: ColumnDistribution = ColumnDistribution.UNIFORM
    low: float = 0.0
    high: float = 1000.0
    vocabulary_size: int = Field(default=16, ge=1)
    start: datetime = datetime(2008, 1, 1)
    end: datetime = datetime(2012, 1, 1)


class TableSpec(BaseModel):
    """One generated table."""

    name: str
    row_count: int = Field(ge=0)
    rows_per_block: int = Field(ge=1)
    columns: list[ColumnSpec] = Field(default_factory=list)


class GridSpec(BaseModel):
    """2-D tile grid laid over one table for navigational workloads."""

    table: str
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)


class DatabaseSpec(BaseModel):
    """Declarative database spec (JSON file)."""

    tables: list[TableSpec] = Field(default_factory=list)
    grid: GridSpec | None = None

    @classmethod
    def desk_default(cls, n_tables: int = 4, blocks_per_table: int = 256) -> "DatabaseSpec":
        """Small multi-table database used by the desk-scale preset."""
        rows_per_block = 16
        names = ["photo_obj", "spec_obj", "galaxy", "star", "neighbors", "field", "frame", "region"]
        tables = []
        for i in range(n_tables):
            name = names[i] if i < len(names) else f"table_{i}"
            tables.append(
                TableSpec(
                    name=name,
                    row_count=blocks_per_table * rows_per_block,
                    rows_per_block=rows_per_block,
                    columns=[
                        ColumnSpec(name="obj_id", distribution=ColumnDistribution.SEQUENTIAL,
                                   low=0.0, high=1e6),
                        ColumnSpec(name="ra", low=0.0, high=360.0),
                        ColumnSpec(name="dec", low=-90.0, high=90.0),
                        ColumnSpec(name="obj_type", kind=ColumnKind.TEXT, vocabulary_size=12),
                        ColumnSpec(name="observed_at", kind=ColumnKind.DATETIME,
                                   distribution=ColumnDistribution.SEQUENTIAL),
                    ],
                )
            )
        return cls(tables=tables, grid=GridSpec(table=tables[0].name, rows=16, cols=16))


class WorkloadSpec(BaseModel):
    """Workload generator knobs."""

    n_queries: int = Field(default=2500, ge=1)
    range_width: int = Field(default=4, ge=1)
    range_width_min: int = Field(default=2, ge=1)
    range_width_max: int = Field(default=8, ge=1)
    start_block: int = Field(default=0, ge=0)
    primary_table: int = Field(default=0, ge=0)
    multi_tables: int = Field(default=3, ge=2)
    delta_schedule: list[int] = Field(default_factory=lambda: [4, 8])
    join_min_tables: int = Field(default=2, ge=2)
    join_max_tables: int = Field(default=4, ge=2)
    segment_length: int = Field(default=10, ge=1)

    # Navigational knobs
    initial_zoom: int = Field(default=1, ge=0)
    max_zoom: int = Field(default=2, ge=0)
    zoom_probability: float = Field(default=0.2, ge=0.0, le=1.0)
    jump_run_min: int = Field(default=3, ge=1)
    jump_run_max: int = Field(default=8, ge=1)

    @model_validator(mode="after")
    def _check_ranges(self) -> "WorkloadSpec":
        if self.range_width_min > self.range_width_max:
            raise ValueError("range_width_min must not exceed range_width_max")
        if self.join_min_tables > self.join_max_tables:
            raise ValueError("join_min_tables must not exceed join_max_tables")
        if self.jump_run_min > self.jump_run_max:
            raise ValueError("jump_run_min must not exceed jump_run_max")
        if not self.delta_schedule:
            raise ValueError("delta_schedule must not be empty")
        return self


class ExperimentConfig(BaseModel):
    """Every harness knob. Defaults are the full-scale configuration; see the presets for desk scale."""

    model_config = ConfigDict(validate_assignment=True)

    # Cache and storage
    cache_bytes: int = Field(default=4 * 1024**3, ge=1)
    block_size_bytes: int = Field(default=32 * 1024, ge=1)
    seek_cost: float = Field(default=10.0, ge=0.0)
    transfer_cost: float = Field(default=1.0, ge=0.0)

    # Partitioning
    max_par_size: int = Field(default=128, ge=1)
    k_w: float = Field(default=10.0, gt=0.0)
    theta_init: float = Field(default=1.0, gt=0.0)
    theta_growth: float = Field(default=1.5, gt=1.0)
    l_p: int = Field(default=2500, ge=1)
    fill_frac: float = Field(default=0.95, gt=0.0, le=1.0)
    spare_frac: float = Field(default=0.05, ge=0.0)
    decay_factor: float = Field(default=0.75, gt=0.0, lt=1.0)

    # Encoding
    l_be: int = Field(default=32, ge=1)
    pca_max_components: int = Field(default=16, ge=1)
    autoencoder_learning_rate: float = Field(default=1e-3, gt=0.0)

    # Prediction model
    lookback: int = Field(default=4, ge=1)
    k: int = Field(default=42, ge=0)
    compressor_units: int = Field(default=128, ge=1)
    lstm_units: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    max_epochs: int = Field(default=75, ge=1)
    batch_size: int = Field(default=32, ge=1)
    validation_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)
    patience: int = Field(default=5, ge=1)
    fine_tune_epochs: int = Field(default=15, ge=0)
    fine_tune_learning_rate: float = Field(default=1e-5, gt=0.0)

    # Baselines
    rr_window: int = Field(default=64, ge=1)
    rr_threshold: int = Field(default=13, ge=1)
    rr_extent_factor: int = Field(default=2, ge=1)
    rr_extent_origin: int = Field(default=0, ge=0)

    # Harness
    train_fraction: float = Field(default=0.8, gt=0.0, lt=1.0)
    window_queries: int = Field(default=50, ge=1)
    adaptivity_batch_queries: int = Field(default=2000, ge=1)
    adaptivity_warmup_queries: int = Field(default=500, ge=1)
    adaptivity_tables: int = Field(default=4, ge=1)
    seed: int = 0
    model_seed: int = 0
    workload: WorkloadSpec = Field(default_factory=WorkloadSpec)

    @property
    def cache_capacity_blocks(self) -> int:
        """Cache capacity in blocks (cache bytes / block size)."""
        return max(1, self.cache_bytes // self.block_size_bytes)

    @classmethod
    def full_scale(cls) -> "ExperimentConfig":
        """Configuration used by the SQL-based experiments."""
        return cls()

    @classmethod
    def desk_scale(cls) -> "ExperimentConfig":
        """Scaled preset: every mechanism runs, a full pipeline finishes in minutes."""
        return cls(
            cache_bytes=64 * 1024**2,
            block_size_bytes=8 * 1024,
            max_par_size=16,
            l_p=100,
            k=8,
            workload=WorkloadSpec(n_queries=2500),
            adaptivity_batch_queries=2000,
            adaptivity_warmup_queries=500,
        )

    @classmethod
    def navigational(cls) -> "ExperimentConfig":
        """Navigational preset: larger partitions, smaller blocks and cache."""
        return cls(
            cache_bytes=500 * 1024**2,
            block_size_bytes=16 * 1024,
            max_par_size=64,
            k=36,
        )

    @classmethod
    def preset(cls, name: str) -> "ExperimentConfig":
        """Look up a preset by name."""
        presets = {
            "full": cls.full_scale,
            "desk": cls.desk_scale,
            "navigational": cls.navigational,
        }
        if name not in presets:
            raise ValueError(f"Unknown preset: {name}. Valid: {list(presets)}")
        return presets[name]()


class ReportRow(BaseModel):
    """One system's results on one workload at one k. Field order is the report column order."""

    system: str
    workload: str
    k: int
    hits: int
    misses: int
    hit_ratio: float = Field(ge=0.0, le=1.0)
    coverage: float | None = Field(default=None, le=1.0)
    t_io: float
    relative_t_io: float | None = None
    prefetched_blocks: int = 0
    useful_prefetches: int = 0
    prefetch_accuracy: float | None = None
    prefetch_t_io: float = 0.0
    repartition_count: int = 0
    fine_tune_count: int = 0

    # Wall-clock seconds per stage; zero for stages a system does not have
    encode_seconds: float = Field(default=0.0, ge=0.0)
    partition_seconds: float = Field(default=0.0, ge=0.0)
    train_seconds: float = Field(default=0.0, ge=0.0)
    repartition_seconds: float = Field(default=0.0, ge=0.0)
    fine_tune_seconds: float = Field(default=0.0, ge=0.0)
    predict_seconds: float = Field(default=0.0, ge=0.0)
    prefetch_seconds: float = Field(default=0.0, ge=0.0)


TIMING_FIELDS = (
    "encode_seconds",
    "partition_seconds",
    "train_seconds",
    "repartition_seconds",
    "fine_tune_seconds",
    "predict_seconds",
    "prefetch_seconds",
)
