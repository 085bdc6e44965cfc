"""One entry point for every named workload."""

from app.exceptions import ConfigurationError
from app.schemas import NavigationMode, WorkloadCategory, WorkloadSpec
from .database import Database
from .nav_workload import generate_nav_workload
from .sql_workload import generate_sql_workload
from .traces import QueryTrace

NAV_PREFIX = "nav-"

WORKLOAD_NAMES = [c.value for c in WorkloadCategory] + [f"{NAV_PREFIX}{m.value}" for m in NavigationMode]


def generate_workload(
    db: Database, name: str, n_queries: int, seed: int, spec: WorkloadSpec | None = None
) -> QueryTrace:
    """SQL categories by their name (s-reg, ..., full); navigational ones as nav-<mode>."""
    if name not in WORKLOAD_NAMES:
        raise ConfigurationError(f"Unknown workload: {name}. Valid: {WORKLOAD_NAMES}")
    if name.startswith(NAV_PREFIX):
        return generate_nav_workload(db, name.removeprefix(NAV_PREFIX), n_queries, seed, spec)
    return generate_sql_workload(db, name, n_queries, seed, spec)
