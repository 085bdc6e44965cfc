"""Query records, traces and the JSONL trace file format.

One record per line:
    {"q": query_id, "t": timestep, "b": [[table_id, block_no], ...], "cat": "s-reg"}
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from app.exceptions import IntegrityError, TraceParseError
from .database import BlockId, Database


@dataclass(frozen=True)
class QueryRecord:
    """Blocks one query touched."""

    query_id: int
    timestep: int
    accessed_blocks: frozenset[BlockId]
    label: str | None = None

    def sorted_blocks(self) -> list[BlockId]:
        return sorted(self.accessed_blocks)

    def to_json(self) -> str:
        payload: dict = {
            "q": self.query_id,
            "t": self.timestep,
            "b": [[b.table_id, b.block_no] for b in self.sorted_blocks()],
        }
        if self.label is not None:
            payload["cat"] = self.label
        return json.dumps(payload, separators=(",", ":"))


@dataclass
class QueryTrace:
    """Ordered query records of one session."""

    records: list[QueryRecord] = field(default_factory=list)
    database_ref: str = ""

    def __post_init__(self) -> None:
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.query_id <= prev.query_id:
                raise IntegrityError(
                    f"query_id must increase: {prev.query_id} then {cur.query_id}"
                )
            if cur.timestep < prev.timestep:
                raise IntegrityError(
                    f"timestep decreases at query {cur.query_id}: {prev.timestep} -> {cur.timestep}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[QueryRecord]:
        return iter(self.records)

    def __getitem__(self, index: int) -> QueryRecord:
        return self.records[index]

    def slice(self, start: int, end: int | None = None) -> "QueryTrace":
        return QueryTrace(self.records[start:end], self.database_ref)

    def total_demanded_blocks(self) -> int:
        return sum(len(r.accessed_blocks) for r in self.records)

    def checksum(self) -> str:
        """MD5 over the canonical JSONL form; equal traces share a checksum."""
        digest = hashlib.md5()
        for record in self.records:
            digest.update(record.to_json().encode("utf-8"))
            digest.update(b"\n")
        return digest.hexdigest()


def validate_trace(trace: QueryTrace, db: Database) -> None:
    """Raise IntegrityError on the first record naming a block outside db."""
    for record in trace:
        for block in record.sorted_blocks():
            if not db.contains(block):
                raise IntegrityError(
                    f"Query {record.query_id} references block {tuple(block)} not in the database"
                )


def save_trace(trace: QueryTrace, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for record in trace:
            f.write(record.to_json())
            f.write("\n")
    return path


def is_json_int(value) -> bool:
    """True for JSON integers; true and false do not count."""
    return isinstance(value, int) and not isinstance(value, bool)


def _parse_line(line: str, line_no: int) -> QueryRecord:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as e:
        raise TraceParseError(line_no, f"invalid JSON ({e.msg})") from e
    if not isinstance(payload, dict):
        raise TraceParseError(line_no, "record is not a JSON object")
    try:
        query_id = payload["q"]
        timestep = payload["t"]
        raw_blocks = payload["b"]
    except KeyError as e:
        raise TraceParseError(line_no, f"missing field {e.args[0]!r}") from e
    if not is_json_int(query_id) or not is_json_int(timestep):
        raise TraceParseError(line_no, "q and t must be integers")
    if not isinstance(raw_blocks, list):
        raise TraceParseError(line_no, "b must be a list of [table_id, block_no] pairs")
    blocks = set()
    for item in raw_blocks:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not all(is_json_int(v) for v in item)
        ):
            raise TraceParseError(line_no, f"bad block reference {item!r}")
        blocks.add(BlockId(item[0], item[1]))
    label = payload.get("cat")
    if label is not None and not isinstance(label, str):
        raise TraceParseError(line_no, "cat must be a string")
    return QueryRecord(query_id, timestep, frozenset(blocks), label)


def load_trace(path: str | Path, database_ref: str = "") -> QueryTrace:
    """
    Parse a JSONL trace. Blank lines are skipped; block ids are not checked
    against any database here (see validate_trace).

    Args:
        path: Trace file
        database_ref: Identifier of the generating database

    Returns:
        QueryTrace with records in file order
    """
    records: list[QueryRecord] = []
    with Path(path).open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            record = _parse_line(line, line_no)
            if records and record.query_id <= records[-1].query_id:
                raise TraceParseError(line_no, "query_id must be strictly increasing")
            if records and record.timestep < records[-1].timestep:
                raise TraceParseError(line_no, "timestep must be non-decreasing")
            records.append(record)
    return QueryTrace(records, database_ref)
