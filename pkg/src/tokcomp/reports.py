"""JSON / CSV report writers and the matching readers."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    if columns is None:
        columns = []
        for row in rows:
            columns.extend(k for k in row if k not in columns)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in row.items()})
    return buf.getvalue()


def _coerce(value: str):
    if value == "":
        return None
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    if value[:1] in "[{":
        try:
            return json.loads(value)
        except json.JSONDecodeError:
            pass
    return value


def csv_to_rows(text: str) -> list[dict]:
    return [{k: _coerce(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]


def dump(obj, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        rows = obj if isinstance(obj, list) else obj.get("rows", [obj])
        return rows_to_csv(rows)
    raise ValueError(f"unknown report format {fmt!r}")


def read_report(path):
    """Load a report written by the toolkit; CSV comes back as a list of row dicts."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".csv":
        return csv_to_rows(text)
    return json.loads(text)
