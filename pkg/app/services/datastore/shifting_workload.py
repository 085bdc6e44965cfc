"""Shifting multi-batch workload for the adaptivity scenario.

Each batch scans a set of active tables with cyclic query templates confined
to one region per table. Between batches a fraction of the active tables is
swapped for others, regions of kept tables slide forward onto unseen blocks,
and a fraction of every query segment switches to a fresh join template.
"""

from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from app.exceptions import ConfigurationError
from app.schemas import WorkloadSpec
from .database import BlockId, Database
from .traces import QueryRecord, QueryTrace

TEMPLATE_SEGMENT = 10


@dataclass(frozen=True)
class ShiftProfile:
    """How much one batch departs from the previous one."""

    table_change: float
    unseen_blocks: float
    new_templates: float


DEFAULT_PROFILES: tuple[ShiftProfile, ...] = (
    ShiftProfile(0.0, 0.0, 0.0),
    ShiftProfile(0.8, 0.2, 0.0),
    ShiftProfile(0.75, 0.33, 0.66),
    ShiftProfile(1.0, 0.85, 1.0),
)


@dataclass(frozen=True)
class QueryTemplate:
    """Cyclic scan: range width, start-delta schedule, and whether the next active table is joined."""

    width: int
    deltas: tuple[int, ...]
    join: bool = False


@dataclass
class ShiftingWorkload:
    """Trace plus batch layout."""

    trace: QueryTrace
    warmup_queries: int
    batch_queries: int
    batch_starts: list[int] = field(default_factory=list)
    active_tables: list[list[int]] = field(default_factory=list)
    profiles: tuple[ShiftProfile, ...] = DEFAULT_PROFILES


class _TemplateScanner:
    """Cursor state of one template over the active tables of a batch."""

    def __init__(self, template: QueryTemplate, region_blocks: int):
        self.template = template
        self.region_blocks = region_blocks
        self.step = 0
        self.offsets: dict[int, int] = {}
        self.delta_index: dict[int, int] = {}

    def next_query(self, active: list[int], regions: dict[int, int]) -> frozenset[BlockId]:
        width = min(self.template.width, self.region_blocks)
        primary = active[self.step % len(active)]
        partner = active[(self.step + 1) % len(active)]
        self.step += 1

        offset = self.offsets.get(primary, 0)
        if offset + width > self.region_blocks:
            offset = 0
            self.delta_index[primary] = 0
        k = self.delta_index.get(primary, 0)
        self.offsets[primary] = offset + self.template.deltas[k % len(self.template.deltas)]
        self.delta_index[primary] = k + 1

        blocks = {BlockId(primary, regions[primary] + offset + i) for i in range(width)}
        if self.template.join and partner != primary:
            blocks |= {BlockId(partner, regions[partner] + offset + i) for i in range(width)}
        return frozenset(blocks)


def generate_shifting_workload(
    db: Database,
    n_active_tables: int,
    batch_queries: int,
    warmup_queries: int,
    seed: int,
    spec: WorkloadSpec | None = None,
    profiles: tuple[ShiftProfile, ...] = DEFAULT_PROFILES,
    region_blocks: int | None = None,
) -> ShiftingWorkload:
    """
    Build the warm-up prefix and the shifting batches.

    Args:
        db: Database with at least 2 * n_active_tables non-empty tables
        n_active_tables: Tables touched per batch
        batch_queries: Queries per batch
        warmup_queries: Queries before the first batch, drawn like the first batch
        seed: RNG seed
        spec: Generator knobs for the base template
        profiles: One ShiftProfile per batch (the first is not a shift)
        region_blocks: Blocks per table region (default: a third of the smallest table)

    Returns:
        ShiftingWorkload
    """
    spec = spec or WorkloadSpec()
    tables = [t.table_id for t in db.tables if t.n_blocks > 0]
    if n_active_tables < 1 or len(tables) < 2 * n_active_tables:
        raise ConfigurationError(
            f"Shifting workload needs {2 * n_active_tables} non-empty tables, "
            f"database has {len(tables)}"
        )
    min_blocks = min(db.n_blocks(t) for t in tables)
    region = region_blocks or max(1, min_blocks // 3)
    if region > min_blocks:
        raise ConfigurationError(f"Region of {region} blocks exceeds the smallest table ({min_blocks})")

    rng = np.random.default_rng(seed)
    base = QueryTemplate(spec.range_width, tuple(max(d, 1) for d in spec.delta_schedule))
    active = tables[:n_active_tables]
    regions: dict[int, int] = {t: 0 for t in active}
    last_used: dict[int, int] = {}

    records: list[QueryRecord] = []
    batch_starts: list[int] = []
    active_history: list[list[int]] = []

    for batch, profile in enumerate(profiles):
        if batch > 0:
            n_change = int(round(profile.table_change * n_active_tables))
            dropped = set(rng.choice(active, size=n_change, replace=False).tolist()) if n_change else set()
            pool = sorted(
                (t for t in tables if t not in active),
                key=lambda t: (last_used.get(t, -1), t),
            )
            kept = [t for t in active if t not in dropped]
            active = kept + pool[:n_change]
            shift = int(round(profile.unseen_blocks * region))
            for t in active:
                if t in regions:
                    regions[t] += shift
                else:
                    regions[t] = 0
                if regions[t] + region > db.n_blocks(t):
                    raise ConfigurationError(
                        f"Table {t} is too small for the shift sequence "
                        f"(region {region} at {regions[t]}, {db.n_blocks(t)} blocks)"
                    )
        for t in active:
            last_used[t] = batch
        active_history.append(list(active))

        scanners = [_TemplateScanner(base, region)]
        n_new = int(round(profile.new_templates * TEMPLATE_SEGMENT))
        if n_new:
            fresh = QueryTemplate(
                width=int(rng.integers(spec.range_width_min, spec.range_width_max + 1)),
                deltas=tuple(int(d) for d in rng.integers(1, 2 * max(base.deltas) + 1, size=2)),
                join=True,
            )
            scanners.append(_TemplateScanner(fresh, region))

        count = batch_queries + (warmup_queries if batch == 0 else 0)
        for i in range(count):
            if batch == 0 and i == warmup_queries:
                batch_starts.append(len(records))
            elif batch > 0 and i == 0:
                batch_starts.append(len(records))
            scanner = scanners[1] if n_new and i % TEMPLATE_SEGMENT < n_new else scanners[0]
            label = "warmup" if batch == 0 and i < warmup_queries else f"batch-{batch + 1}"
            q = len(records)
            records.append(QueryRecord(q, q, scanner.next_query(active, regions), label))

    trace = QueryTrace(records, db.fingerprint())
    logger.info(
        f"Generated shifting workload: warmup={warmup_queries}, "
        f"{len(profiles)} batches x {batch_queries} queries, region={region} blocks"
    )
    return ShiftingWorkload(
        trace=trace,
        warmup_queries=warmup_queries,
        batch_queries=batch_queries,
        batch_starts=batch_starts,
        active_tables=active_history,
        profiles=profiles,
    )
