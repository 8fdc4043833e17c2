"""Fixed, versioned CSV result schema."""

from __future__ import annotations

import csv
import threading
from pathlib import Path

from .. import rng as _rng

SCHEMA_VERSION = 1
COLUMNS = ("schema_version", "kind", "method", "n", "snr_prime", "noise", "d", "ell", "k",
           "colorings", "tau", "span_t", "repeats", "trial", "seed", "sq_corr", "statistic",
           "decision", "status", "runtime_ms")
# columns that identify a cell (everything that is an input, minus the trial index and outputs)
CELL_COLUMNS = ("kind", "method", "n", "snr_prime", "noise", "d", "ell", "k", "colorings",
                "tau", "span_t", "repeats")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def make_row(**values) -> dict:
    unknown = set(values) - set(COLUMNS)
    if unknown:
        raise KeyError(f"unknown CSV columns {sorted(unknown)}")
    row = {c: "" for c in COLUMNS}
    row["schema_version"] = str(SCHEMA_VERSION)
    for key, v in values.items():
        row[key] = _fmt(v)
    return row


def cell_hash(row: dict) -> int:
    return _rng.stable_hash({c: row.get(c, "") for c in CELL_COLUMNS})


def row_key(row: dict) -> tuple[int, str]:
    return cell_hash(row), row["trial"]


def read_rows(path) -> list[dict]:
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        return []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"{path} does not follow CSV schema v{SCHEMA_VERSION}")
        return list(reader)


def write_rows(path, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


class Appender:
    """Serialises row appends from concurrent workers into one file."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        if not self.path.exists() or self.path.stat().st_size == 0:
            write_rows(self.path, [])
        else:
            read_rows(self.path)  # schema check

    def append(self, row: dict) -> None:
        with self._lock, self.path.open("a", newline="") as fh:
            csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n").writerow(row)
