"""Prefetcher plugins: the no-prefetch reference, traditional baselines and the learned system."""

from prefetchers.base import BasePrefetcher, LbaPrefetcher, PrefetchContext
from prefetchers.registry import PrefetcherRegistry, prefetcher_registry

__all__ = [
    "BasePrefetcher",
    "LbaPrefetcher",
    "PrefetchContext",
    "PrefetcherRegistry",
    "prefetcher_registry",
]
