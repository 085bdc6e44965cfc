"""Synthetic databases and query-trace workloads."""

from .database import (
    AddressSpace,
    Block,
    BlockId,
    Database,
    Table,
    TableSchema,
    TileGrid,
    generate_database,
    load_database,
    save_database,
)
from .nav_workload import generate_nav_workload, navigation_path
from .shifting_workload import (
    DEFAULT_PROFILES,
    ShiftProfile,
    ShiftingWorkload,
    generate_shifting_workload,
)
from .sql_workload import generate_sql_workload
from .traces import QueryRecord, QueryTrace, is_json_int, load_trace, save_trace, validate_trace
from .workloads import WORKLOAD_NAMES, generate_workload

__all__ = [
    "AddressSpace",
    "Block",
    "BlockId",
    "DEFAULT_PROFILES",
    "Database",
    "QueryRecord",
    "QueryTrace",
    "ShiftProfile",
    "ShiftingWorkload",
    "Table",
    "TableSchema",
    "TileGrid",
    "WORKLOAD_NAMES",
    "generate_database",
    "generate_nav_workload",
    "generate_shifting_workload",
    "generate_sql_workload",
    "generate_workload",
    "is_json_int",
    "load_database",
    "load_trace",
    "navigation_path",
    "save_database",
    "save_trace",
    "validate_trace",
]
