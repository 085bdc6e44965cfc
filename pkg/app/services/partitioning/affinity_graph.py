"""Affinity graph: co-access weights between accessed blocks."""

from itertools import combinations
from typing import Iterable, Iterator

from app.exceptions import ConfigurationError
from app.services.datastore import BlockId


class AffinityGraph:
    """Undirected weighted graph kept as a symmetric adjacency dict.

    A node exists only once its block has been accessed; there are no self-edges.
    """

    def __init__(self):
        self._adj: dict[BlockId, dict[BlockId, float]] = {}

    def __contains__(self, block: BlockId) -> bool:
        return block in self._adj

    def __len__(self) -> int:
        return len(self._adj)

    @property
    def n_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self._adj.values()) // 2

    def nodes(self) -> list[BlockId]:
        return sorted(self._adj)

    def add_node(self, block: BlockId) -> None:
        self._adj.setdefault(block, {})

    def neighbors(self, block: BlockId) -> dict[BlockId, float]:
        return self._adj.get(block, {})

    def weight(self, u: BlockId, v: BlockId) -> float:
        return self._adj.get(u, {}).get(v, 0.0)

    def add_weight(self, u: BlockId, v: BlockId, amount: float) -> None:
        if u == v:
            return
        self.add_node(u)
        self.add_node(v)
        self._adj[u][v] = self._adj[u].get(v, 0.0) + amount
        self._adj[v][u] = self._adj[v].get(u, 0.0) + amount

    def edges(self) -> Iterator[tuple[BlockId, BlockId, float]]:
        """Each undirected edge once, as (u, v, w) with u < v."""
        for u in sorted(self._adj):
            for v, w in self._adj[u].items():
                if u < v:
                    yield u, v, w

    def observe(self, blocks: Iterable[BlockId], l_p: int) -> None:
        """Add a node per block and 1/l_p to every co-accessed pair."""
        ordered = sorted(set(blocks))
        increment = 1.0 / l_p
        for block in ordered:
            self.add_node(block)
        for u, v in combinations(ordered, 2):
            self.add_weight(u, v, increment)

    def scale(self, factor: float) -> None:
        for nbrs in self._adj.values():
            for v in nbrs:
                nbrs[v] *= factor

    def copy(self) -> "AffinityGraph":
        clone = AffinityGraph()
        clone._adj = {u: dict(nbrs) for u, nbrs in self._adj.items()}
        return clone


def observe_query(graph: AffinityGraph, res_b: Iterable[BlockId], l_p: int) -> AffinityGraph:
    """Record one query's co-accesses; returns the same (mutated) graph."""
    if l_p < 1:
        raise ConfigurationError(f"l_p must be at least 1, got {l_p}")
    graph.observe(res_b, l_p)
    return graph


def decay_weights(graph: AffinityGraph, factor: float) -> AffinityGraph:
    """Multiply every weight by factor, 0 < factor < 1."""
    if not 0.0 < factor < 1.0:
        raise ConfigurationError(f"Decay factor must be in (0, 1), got {factor}")
    graph.scale(factor)
    return graph
