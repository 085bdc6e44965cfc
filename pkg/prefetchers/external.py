"""Replays candidate lists produced outside the simulator."""

import json
from pathlib import Path

from app.exceptions import ConfigurationError, TraceParseError
from app.services.datastore import BlockId, QueryRecord, QueryTrace, is_json_int
from prefetchers.base import BasePrefetcher, PrefetchContext


def load_candidate_file(path: str | Path) -> dict[int, list[BlockId]]:
    """
    Parse a JSONL file of {"q": query_id, "b": [[table_id, block_no], ...]}.

    The blocks listed for query q are prefetched right after q completes.
    """
    candidates: dict[int, list[BlockId]] = {}
    with Path(path).open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as e:
                raise TraceParseError(line_no, f"invalid JSON ({e.msg})") from e
            if not isinstance(payload, dict) or not is_json_int(payload.get("q")):
                raise TraceParseError(line_no, "expected an object with an integer q")
            raw = payload.get("b", [])
            if not isinstance(raw, list) or not all(
                isinstance(item, list) and len(item) == 2 and all(is_json_int(v) for v in item)
                for item in raw
            ):
                raise TraceParseError(line_no, "b must be a list of [table_id, block_no] pairs")
            candidates[payload["q"]] = [BlockId(t, b) for t, b in raw]
    return candidates


class ExternalPrefetcher(BasePrefetcher):
    """Stand-in for learned baselines that are not reimplemented here."""

    @property
    def name(self) -> str:
        return "external"

    @property
    def display_name(self) -> str:
        return "External candidates"

    def setup(self, context: PrefetchContext) -> None:
        super().setup(context)
        if context.external_path is None:
            raise ConfigurationError("The external system needs a candidate file")
        self.candidate_lists = load_candidate_file(context.external_path)
        self.last_query: int | None = None

    def warm_up(self, trace: QueryTrace) -> None:
        pass

    def observe(self, record: QueryRecord) -> None:
        self.last_query = record.query_id

    def candidates(self, budget: int) -> list[BlockId]:
        listed = self.candidate_lists.get(self.last_query, [])
        blocks = []
        for block in dict.fromkeys(listed):
            if len(blocks) >= budget:
                break
            if self.context.db.contains(block):
                blocks.append(block)
        return blocks
