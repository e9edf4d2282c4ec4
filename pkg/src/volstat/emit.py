"""
Report container and deterministic CSV/JSON serialization.

A report is a set of named tables plus a summary dict, stamped with a
provenance block (sha256 of every input file and the configuration that
produced it). Nothing time- or host-dependent is written, so identical
inputs and configuration give byte-identical output.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple]


@dataclass
class Report:
    name: str
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)  # label -> sha256
    tables: dict[str, Table] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def add_input(self, label: str, path) -> None:
        self.inputs[label] = file_sha256(path)

    def add_table(self, name: str, columns, rows) -> None:
        self.tables[name] = Table(tuple(columns), [tuple(r) for r in rows])


def plain(value):
    """Convert numpy scalars, enums, dates and tuples to JSON-native values."""
    if isinstance(value, enum.Enum):
        return plain(value.value)
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, np.datetime64):
        return str(value.astype("datetime64[D]"))
    if isinstance(value, np.generic):
        return plain(value.item())
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if hasattr(value, "isoformat"):
        return value.isoformat()
    if isinstance(value, Path):
        return str(value)
    return value


def _cell(value) -> str:
    v = plain(value)
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True, separators=(",", ":"))
    return str(v)


def to_json(report: Report) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "report": report.name,
        "provenance": {"inputs": dict(sorted(report.inputs.items())),
                       "config": plain(report.config)},
        "summary": plain(report.summary),
        "tables": {name: {"columns": list(t.columns), "rows": plain(t.rows)}
                   for name, t in report.tables.items()},
    }
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def to_csv(report: Report) -> str:
    """Comment-prefixed provenance and summary, then one block per table."""
    buf = io.StringIO()
    buf.write(f"# schema_version: {SCHEMA_VERSION}\n")
    buf.write(f"# report: {report.name}\n")
    for label, digest in sorted(report.inputs.items()):
        buf.write(f"# input {label}: sha256={digest}\n")
    buf.write("# config: " + json.dumps(plain(report.config), sort_keys=True,
                                        separators=(",", ":")) + "\n")
    for key in sorted(report.summary):
        buf.write(f"# summary {key}: {_cell(report.summary[key])}\n")
    writer = csv.writer(buf, lineterminator="\n")
    for name, t in report.tables.items():
        buf.write(f"# table: {name}\n")
        writer.writerow(t.columns)
        for row in t.rows:
            writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render(report: Report, fmt: str = "csv") -> str:
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(report)
    raise ValueError(f"unknown output format {fmt!r}")
