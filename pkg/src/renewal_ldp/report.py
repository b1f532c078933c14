"""Machine-readable reports: one header block and one data table.

JSON and CSV carry the same numbers: floats are written with 17
significant digits in CSV and with Python's round-trip ``repr`` in JSON.
"""

import csv
import datetime as _dt
import io
import json
import math
import platform
from dataclasses import dataclass, field

import numpy as np
import scipy


def versions():
    from . import __version__, kernels

    return {
        "renewal_ldp": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "kernels": kernels.BACKEND,
    }


def _plain(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _csv_cell(value):
    value = _plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


@dataclass
class Report:
    """Result of one CLI subcommand."""

    command: str
    config: dict
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    seed: int | None = None
    timestamp: str = field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    )

    def header(self):
        return {
            "command": self.command,
            "config": _plain(self.config),
            "versions": versions(),
            "seed": self.seed,
            "timestamp": self.timestamp,
            "summary": _plain(self.summary),
        }

    def data(self):
        return {"columns": list(self.columns), "rows": [[_plain(r.get(c)) for c in self.columns] for r in self.rows]}

    def statuses(self):
        return [r.get("status", "ok") for r in self.rows]

    def exit_code(self):
        st = self.statuses()
        if not st:
            return 0
        bad = sum(s != "ok" for s in st)
        if bad == 0:
            return 0
        return 4 if bad == len(st) else 3

    def to_json(self):
        return json.dumps({"header": self.header(), "data": self.data()}, indent=2) + "\n"

    def data_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_csv_cell(row.get(c)) for c in self.columns])
        return buf.getvalue()

    def to_csv(self):
        lines = [f"# {key}: {json.dumps(val)}" for key, val in self.header().items()]
        return "\n".join(lines) + "\n" + self.data_csv()

    def render(self, fmt="csv"):
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown format {fmt!r}")


def parse_csv_data(text):
    """Rows of a CSV report as dicts of strings (header comments skipped)."""
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(body))


def num(value):
    """Parse a CSV cell back to a float (empty means NaN)."""
    return math.nan if value in ("", None) else float(value)
