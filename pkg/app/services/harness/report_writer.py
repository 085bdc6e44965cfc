"""Report files: CSV or JSON with a fixed column order."""

import csv
import json
from enum import Enum
from pathlib import Path

from app.exceptions import ConfigurationError
from app.schemas import TIMING_FIELDS, ReportRow

TIMED_REPORT_COLUMNS = list(ReportRow.model_fields)
REPORT_COLUMNS = [c for c in TIMED_REPORT_COLUMNS if c not in TIMING_FIELDS]


class ReportFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def _format_for(path: Path, fmt: ReportFormat | str | None) -> ReportFormat:
    if fmt is None:
        fmt = path.suffix.lstrip(".").lower() or "csv"
    try:
        return ReportFormat(fmt)
    except ValueError:
        raise ConfigurationError(f"Unknown report format: {fmt}. Valid: csv, json") from None


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(
    rows: list[ReportRow],
    path: str | Path,
    fmt: ReportFormat | str | None = None,
    include_timings: bool = False,
) -> Path:
    """
    Write report rows.

    Args:
        rows: Report rows (must not be empty)
        path: Output file
        fmt: csv or json (default: from the file suffix)
        include_timings: Append the per-stage wall-clock columns (they vary between runs)

    Returns:
        Path written
    """
    if not rows:
        raise ConfigurationError("Refusing to write an empty report")
    path = Path(path)
    fmt = _format_for(path, fmt)
    columns = TIMED_REPORT_COLUMNS if include_timings else REPORT_COLUMNS
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == ReportFormat.CSV:
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(getattr(row, c)) for c in columns])
    else:
        payload = [row.model_dump(include=set(columns)) for row in rows]
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def read_report(path: str | Path, fmt: ReportFormat | str | None = None) -> list[ReportRow]:
    """Read a report written with or without the timing columns; missing timings read as zero."""
    path = Path(path)
    fmt = _format_for(path, fmt)
    if fmt == ReportFormat.CSV:
        with path.open("r", newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames not in (REPORT_COLUMNS, TIMED_REPORT_COLUMNS):
                raise ConfigurationError(f"{path} does not have the report columns")
            return [
                ReportRow.model_validate({k: (None if v == "" else v) for k, v in raw.items()})
                for raw in reader
            ]
    payload = json.loads(path.read_text(encoding="utf-8"))
    return [ReportRow.model_validate(item) for item in payload]
