"""Output schemas: JSON-lines trial records and the summary CSV."""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable

SCHEMA_VERSION = 1

SUMMARY_COLUMNS = ["schema", "graph", "n", "k", "trials", "mean", "median",
                   "q05", "q25", "q75", "q95", "se", "capped_count"]

_int_or_null = {"type": ["integer", "null"]}

TRIAL_SCHEMA = {
    "type": "object",
    "required": ["schema", "graph", "n", "k", "seed", "trial", "xi", "capped", "phase_entry"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "graph": {"enum": ["path", "cycle"]},
        "n": {"type": "integer", "minimum": 2},
        "k": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer"},
        "point": {"type": "integer", "minimum": 0},
        "trial": {"type": "integer", "minimum": 0},
        "xi": {"type": "integer", "minimum": 0},
        "capped": {"type": "boolean"},
        "phase_entry": {"type": "array", "items": _int_or_null},
        "diagnostics": {"type": "object"},
    },
}

COUPLED_SCHEMA = {
    "type": "object",
    "required": ["schema", "n", "k", "seed", "trial", "xi_cycle", "xi_path",
                 "unusual_count", "comparable", "capped"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "n": {"type": "integer", "minimum": 3},
        "k": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer"},
        "trial": {"type": "integer", "minimum": 0},
        "xi_cycle": {"type": "integer", "minimum": 0},
        "xi_path": {"type": "integer", "minimum": 0},
        "unusual_count": {"type": "integer", "minimum": 0},
        "comparable": {"type": "boolean"},
        "capped": {"type": "boolean"},
        "containment_violations": {"type": "integer", "minimum": 0},
    },
}

TRACE_SCHEMA = {
    "type": "object",
    "required": ["schema", "trial", "round", "phase", "colocations", "swaps", "newly_green"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "trial": {"type": "integer"},
        "round": {"type": "integer", "minimum": 1},
        "phase": {"type": "integer", "minimum": 1},
        "colocations": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
        "swaps": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
        "newly_green": {"type": "array", "items": {"type": "integer"}},
    },
}


def dumps(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), sort_keys=False)


def write_jsonl(records: Iterable[dict], fh) -> None:
    for rec in records:
        fh.write(dumps(rec))
        fh.write("\n")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_summary_csv(rows: Iterable[dict], fh, header: bool = True) -> None:
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in SUMMARY_COLUMNS])


def summary_csv_text(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    write_summary_csv(rows, buf)
    return buf.getvalue()
