"""Shared fixtures: small databases, a fast configuration and an in-memory run store."""

import numpy as np
import pytest

from app.database import build_engine, create_db_and_tables, session_factory
from app.schemas import DatabaseSpec, ExperimentConfig, WorkloadSpec
from app.services.datastore import BlockId, Database, QueryRecord, QueryTrace, generate_database


def make_config(**overrides) -> ExperimentConfig:
    """Desk preset shrunk so a full pipeline trains in seconds."""
    base = ExperimentConfig.desk_scale().model_dump()
    base.update(
        cache_bytes=64 * 8 * 1024,
        block_size_bytes=8 * 1024,
        max_par_size=4,
        l_p=20,
        k=2,
        l_be=4,
        pca_max_components=4,
        compressor_units=8,
        lstm_units=8,
        max_epochs=3,
        batch_size=16,
        fine_tune_epochs=1,
        rr_threshold=4,
        rr_window=32,
    )
    base.update(overrides)
    return ExperimentConfig.model_validate(base)


def make_trace(queries: list[set[BlockId]], label: str | None = None) -> QueryTrace:
    return QueryTrace([QueryRecord(i, i, frozenset(q), label) for i, q in enumerate(queries)])


def blocks(table_id: int, *block_nos: int) -> set[BlockId]:
    return {BlockId(table_id, b) for b in block_nos}


@pytest.fixture
def small_db() -> Database:
    """Two tables of 32 blocks each, 16 rows per block, with a tile grid on table 0."""
    return generate_database(DatabaseSpec.desk_default(n_tables=2, blocks_per_table=32), seed=7)


@pytest.fixture
def four_table_db() -> Database:
    return generate_database(DatabaseSpec.desk_default(n_tables=4, blocks_per_table=32), seed=11)


@pytest.fixture
def fast_config() -> ExperimentConfig:
    return make_config()


@pytest.fixture
def workload_spec() -> WorkloadSpec:
    return WorkloadSpec(range_width=2, range_width_min=2, range_width_max=4, delta_schedule=[2, 4])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def db_session():
    """Run-store session on an in-memory SQLite database."""
    engine = build_engine("sqlite://")
    create_db_and_tables(engine)
    session = session_factory(engine)()
    try:
        yield session
    finally:
        session.close()
        engine.dispose()
