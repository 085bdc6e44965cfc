"""Clump-migration repartitioner.

Overloaded partitions shed a clump of strongly co-accessed blocks to the
partition that co-accesses them most. When no partition can take the clump
under the current threshold, theta grows and the loop retries.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from loguru import logger

from app.exceptions import ConfigurationError
from app.services.datastore import BlockId
from .affinity_graph import AffinityGraph
from .partition_set import PartitionSet, load_of_blocks

_LOAD_TOLERANCE = 1e-12


@dataclass
class MigrationRecord:
    """One block group moved between two partitions."""

    from_partition: int
    to_partition: int
    blocks: list[BlockId]
    trigger_load: float
    theta: float

    def to_json(self) -> str:
        payload = asdict(self)
        payload["blocks"] = [[b.table_id, b.block_no] for b in self.blocks]
        return json.dumps(payload, separators=(",", ":"))


@dataclass
class RepartitionResult:
    """Outcome of one repartition call."""

    migrations: list[MigrationRecord] = field(default_factory=list)
    theta_before: float = 0.0
    theta_after: float = 0.0
    escalations: int = 0

    @property
    def moved_blocks(self) -> int:
        return sum(len(m.blocks) for m in self.migrations)


class ClumpMigrationRepartitioner:
    """Moves clumps out of partitions whose load exceeds theta.

    Ties are broken by lowest partition id, then lowest block id.
    """

    def __init__(self, theta_growth: float = 1.5, max_moves_per_level: int | None = None):
        if theta_growth <= 1.0:
            raise ConfigurationError(f"theta growth must exceed 1, got {theta_growth}")
        self.theta_growth = theta_growth
        self.max_moves_per_level = max_moves_per_level

    def _loads(self, ps: PartitionSet, graph: AffinityGraph) -> list[float]:
        loads = [0.0] * ps.n_partitions
        for u, v, w in graph.edges():
            pu, pv = ps.partition_of(u), ps.partition_of(v)
            if pu != pv:
                loads[pu] += w * ps.k_w
                loads[pv] += w * ps.k_w
        return loads

    def _build_clump(self, ps: PartitionSet, graph: AffinityGraph, source: int) -> set[BlockId]:
        members = ps[source].blocks

        def cross_weight(v: BlockId) -> float:
            return sum(w for u, w in graph.neighbors(v).items() if u not in members)

        start = min((v for v in members if v in graph), key=lambda v: (-cross_weight(v), v))
        clump = {start}
        attachment: dict[BlockId, float] = {}
        for u, w in graph.neighbors(start).items():
            attachment[u] = attachment.get(u, 0.0) + w

        while len(clump) < ps.max_par_size and attachment:
            if load_of_blocks(members - clump, graph, ps.k_w) <= ps.theta + _LOAD_TOLERANCE:
                break
            nxt = min(attachment, key=lambda u: (-attachment[u], u))
            del attachment[nxt]
            clump.add(nxt)
            for u, w in graph.neighbors(nxt).items():
                if u not in clump:
                    attachment[u] = attachment.get(u, 0.0) + w
        return clump

    def _choose_destination(
        self, ps: PartitionSet, graph: AffinityGraph, clump: set[BlockId]
    ) -> int | None:
        """Best co-accessing partition, else an empty spare, else a zero-affinity fit."""
        best: tuple[float, int] | None = None
        zero_affinity: int | None = None
        for p in ps.partitions:
            if not p.blocks or clump <= p.blocks:
                continue
            merged = p.blocks | clump
            if len(merged) > ps.max_par_size:
                continue
            if load_of_blocks(merged, graph, ps.k_w) > ps.theta + _LOAD_TOLERANCE:
                continue
            others = p.blocks - clump
            co_access = sum(w for v in clump for u, w in graph.neighbors(v).items() if u in others)
            if co_access > 0:
                if best is None or co_access > best[0]:
                    best = (co_access, p.partition_id)
            elif zero_affinity is None:
                zero_affinity = p.partition_id
        if best is not None:
            return best[1]
        if load_of_blocks(clump, graph, ps.k_w) <= ps.theta + _LOAD_TOLERANCE:
            spares = ps.empty_partitions()
            if spares:
                return spares[0]
        return zero_affinity

    def _escalate(self, ps: PartitionSet, result: RepartitionResult, reason: str) -> None:
        old = ps.theta
        ps.theta *= self.theta_growth
        result.escalations += 1
        logger.info(f"Repartition theta {old:.4f} -> {ps.theta:.4f} ({reason})")

    def repartition(self, ps: PartitionSet, graph: AffinityGraph) -> RepartitionResult:
        """
        Migrate clumps until no partition load exceeds theta.

        Args:
            ps: Partition set, mutated in place (theta may grow)
            graph: Affinity graph of the current batch

        Returns:
            RepartitionResult with the migration log
        """
        result = RepartitionResult(theta_before=ps.theta)
        move_cap = self.max_moves_per_level or max(16, 2 * ps.n_partitions)
        moves_at_level = 0

        while True:
            loads = self._loads(ps, graph)
            overloaded = [pid for pid, load in enumerate(loads) if load > ps.theta + _LOAD_TOLERANCE]
            if not overloaded:
                break
            source = min(overloaded, key=lambda pid: (-loads[pid], pid))
            if moves_at_level >= move_cap:
                self._escalate(ps, result, f"{moves_at_level} moves without settling")
                moves_at_level = 0
                continue

            clump = self._build_clump(ps, graph, source)
            destination = self._choose_destination(ps, graph, clump)
            if destination is None:
                self._escalate(ps, result, f"no destination for a {len(clump)}-block clump of partition {source}")
                moves_at_level = 0
                continue

            for from_partition, blocks in ps.move(clump, destination).items():
                record = MigrationRecord(from_partition, destination, blocks, loads[source], ps.theta)
                result.migrations.append(record)
                logger.debug(
                    f"Migrated {len(blocks)} blocks {from_partition} -> {destination} "
                    f"(load {loads[source]:.3f}, theta {ps.theta:.3f})"
                )
            moves_at_level += 1

        ps.check_invariants()
        result.theta_after = ps.theta
        logger.info(
            f"Repartition finished: {len(result.migrations)} migrations, "
            f"{result.moved_blocks} blocks moved, theta={ps.theta:.4f}"
        )
        return result


def repartition(
    ps: PartitionSet, graph: AffinityGraph, theta_growth: float = 1.5
) -> RepartitionResult:
    return ClumpMigrationRepartitioner(theta_growth).repartition(ps, graph)


def save_migration_log(records: list[MigrationRecord], path: str | Path, append: bool = True) -> Path:
    """Write migration records as JSON lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a" if append else "w", encoding="utf-8") as f:
        for record in records:
            f.write(record.to_json() + "\n")
    return path
