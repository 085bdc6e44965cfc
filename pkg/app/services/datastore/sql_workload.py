"""SQL-style workload categories as block-access traces.

reg generators follow fixed cyclic table schedules and a fixed delta schedule;
rand generators draw tables and ranges uniformly. mj-* queries join a primary
range with correlated ranges of other tables through the database's join map.
"""

import numpy as np
from loguru import logger

from app.exceptions import ConfigurationError
from app.schemas import WorkloadCategory, WorkloadSpec
from .database import BlockId, Database
from .traces import QueryRecord, QueryTrace

SINGLE_TABLE = {WorkloadCategory.S_REG, WorkloadCategory.S_RAND}
MIXTURE_MEMBERS = [
    WorkloadCategory.S_REG,
    WorkloadCategory.S_RAND,
    WorkloadCategory.M_REG,
    WorkloadCategory.M_RAND,
    WorkloadCategory.MJ_REG,
    WorkloadCategory.MJ_RAND,
]


class SqlWorkloadGenerator:
    """Stateful generator; each category keeps its own cursors so a mixture stays regular."""

    def __init__(self, db: Database, spec: WorkloadSpec, seed: int):
        self.db = db
        self.spec = spec
        self.rng = np.random.default_rng(seed)
        self.tables = [t.table_id for t in db.tables if t.n_blocks > 0]
        if not self.tables:
            raise ConfigurationError("Database has no blocks to query")
        self.primary = self.tables[spec.primary_table % len(self.tables)]
        multi = min(spec.multi_tables, len(self.tables))
        start = self.tables.index(self.primary)
        self.multi = [self.tables[(start + i) % len(self.tables)] for i in range(multi)]

        self._seq_cursor = spec.start_block
        self._reg_step = 0
        self._reg_cursors: dict[int, int] = {}
        self._reg_deltas: dict[int, int] = {}
        self._join_step = 0
        self._join_cursors: dict[int, int] = {}
        self._join_deltas: dict[int, int] = {}

    def _range(self, table_id: int, start: int, width: int) -> set[BlockId]:
        n = self.db.n_blocks(table_id)
        width = min(width, n)
        start = min(max(start, 0), n - width)
        return {BlockId(table_id, b) for b in range(start, start + width)}

    def _random_width(self) -> int:
        return int(self.rng.integers(self.spec.range_width_min, self.spec.range_width_max + 1))

    def _random_range(self, table_id: int) -> set[BlockId]:
        n = self.db.n_blocks(table_id)
        width = min(self._random_width(), n)
        start = int(self.rng.integers(0, n - width + 1))
        return self._range(table_id, start, width)

    def _advance(self, cursors: dict[int, int], deltas: dict[int, int], table_id: int) -> int:
        """Return the current start of table_id and move it along the delta schedule."""
        n = self.db.n_blocks(table_id)
        width = min(self.spec.range_width, n)
        start = cursors.get(table_id, self.spec.start_block % n)
        if start + width > n:
            start = self.spec.start_block % n
            if start + width > n:
                start = 0
            deltas[table_id] = 0
        step = deltas.get(table_id, 0)
        schedule = self.spec.delta_schedule
        cursors[table_id] = start + max(schedule[step % len(schedule)], 1)
        deltas[table_id] = step + 1
        return start

    def require_multi_table(self, category: WorkloadCategory) -> None:
        if len(self.tables) < 2:
            raise ConfigurationError(f"Category {category.value} needs at least 2 tables")

    def s_reg(self) -> frozenset[BlockId]:
        n = self.db.n_blocks(self.primary)
        width = min(self.spec.range_width, n)
        if self._seq_cursor + width > n:
            self._seq_cursor = 0
        blocks = self._range(self.primary, self._seq_cursor, width)
        self._seq_cursor += width
        return frozenset(blocks)

    def s_rand(self) -> frozenset[BlockId]:
        return frozenset(self._random_range(self.primary))

    def m_reg(self) -> frozenset[BlockId]:
        table_id = self.multi[self._reg_step % len(self.multi)]
        self._reg_step += 1
        start = self._advance(self._reg_cursors, self._reg_deltas, table_id)
        return frozenset(self._range(table_id, start, self.spec.range_width))

    def m_rand(self) -> frozenset[BlockId]:
        table_id = self.multi[int(self.rng.integers(0, len(self.multi)))]
        return frozenset(self._random_range(table_id))

    def _join_arity_bounds(self) -> tuple[int, int]:
        hi = min(self.spec.join_max_tables, len(self.tables))
        lo = min(self.spec.join_min_tables, hi)
        return lo, hi

    def _joined(self, primary: int, start: int, width: int, others: list[int]) -> set[BlockId]:
        blocks = self._range(primary, start, width)
        for other in others:
            other_start = self.db.correlated_start(primary, other, start, width)
            blocks |= self._range(other, other_start, width)
        return blocks

    def mj_reg(self) -> frozenset[BlockId]:
        lo, hi = self._join_arity_bounds()
        arity = lo + self._join_step % (hi - lo + 1)
        primary = self.multi[self._join_step % len(self.multi)]
        self._join_step += 1
        start = self._advance(self._join_cursors, self._join_deltas, primary)
        idx = self.tables.index(primary)
        others = [self.tables[(idx + i) % len(self.tables)] for i in range(1, arity)]
        return frozenset(self._joined(primary, start, self.spec.range_width, others))

    def mj_rand(self) -> frozenset[BlockId]:
        lo, hi = self._join_arity_bounds()
        arity = int(self.rng.integers(lo, hi + 1))
        chosen = self.rng.choice(len(self.tables), size=arity, replace=False)
        primary, others = self.tables[chosen[0]], [self.tables[i] for i in chosen[1:]]
        n = self.db.n_blocks(primary)
        width = min(self._random_width(), n)
        start = int(self.rng.integers(0, n - width + 1))
        return frozenset(self._joined(primary, start, width, others))

    def next_blocks(self, category: WorkloadCategory) -> frozenset[BlockId]:
        if category not in SINGLE_TABLE:
            self.require_multi_table(category)
        handlers = {
            WorkloadCategory.S_REG: self.s_reg,
            WorkloadCategory.S_RAND: self.s_rand,
            WorkloadCategory.M_REG: self.m_reg,
            WorkloadCategory.M_RAND: self.m_rand,
            WorkloadCategory.MJ_REG: self.mj_reg,
            WorkloadCategory.MJ_RAND: self.mj_rand,
        }
        return handlers[category]()

    def mixture_schedule(self, n_queries: int) -> list[WorkloadCategory]:
        """Seeded permutation of the six categories, cycled in segments."""
        order = [MIXTURE_MEMBERS[i] for i in self.rng.permutation(len(MIXTURE_MEMBERS))]
        segment = self.spec.segment_length
        return [order[(i // segment) % len(order)] for i in range(n_queries)]


def generate_sql_workload(
    db: Database,
    category: WorkloadCategory | str,
    n_queries: int,
    seed: int,
    spec: WorkloadSpec | None = None,
) -> QueryTrace:
    """
    Generate a trace of one SQL workload category.

    Args:
        db: Generated database
        category: s-reg, s-rand, m-reg, m-rand, mj-reg, mj-rand or full
        n_queries: Number of queries
        seed: RNG seed
        spec: Generator knobs (defaults when omitted)

    Returns:
        QueryTrace labelled per record with the category that produced it
    """
    try:
        category = WorkloadCategory(category)
    except ValueError as e:
        raise ConfigurationError(f"Unknown workload category: {category}") from e
    if n_queries < 1:
        raise ConfigurationError("n_queries must be at least 1")
    spec = spec or WorkloadSpec()
    generator = SqlWorkloadGenerator(db, spec, seed)

    if category == WorkloadCategory.FULL:
        generator.require_multi_table(category)
        schedule = generator.mixture_schedule(n_queries)
    else:
        schedule = [category] * n_queries

    records = [
        QueryRecord(i, i, generator.next_blocks(cat), cat.value) for i, cat in enumerate(schedule)
    ]
    trace = QueryTrace(records, db.fingerprint())
    logger.info(
        f"Generated {category.value} trace: {len(trace)} queries, "
        f"{trace.total_demanded_blocks()} block accesses"
    )
    return trace
