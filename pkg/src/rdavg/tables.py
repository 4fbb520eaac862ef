"""Tab-separated tables with ``# key: value`` header comments."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

__all__ = ["write_table", "read_table"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, columns: dict, meta: dict | None = None) -> Path:
    """Write equal-length columns; ``meta`` values are JSON-encoded in the header."""
    path = Path(path)
    names = list(columns)
    cols = [np.atleast_1d(np.asarray(columns[k])) for k in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ConfigurationError(f"columns differ in length: {dict(zip(names, map(len, cols)))}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {json.dumps(v, default=float)}\n")
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])
    return path


def read_table(path) -> tuple[dict, dict]:
    """Return ``(meta, columns)``; numeric columns come back as float arrays."""
    meta, rows = {}, []
    with Path(path).open(newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = json.loads(val)
            else:
                lines.append(line)
    reader = csv.reader(lines, delimiter="\t")
    header = next(reader)
    rows = list(reader)
    columns = {}
    for i, name in enumerate(header):
        vals = [r[i] for r in rows]
        try:
            columns[name] = np.array([float(v) for v in vals])
        except ValueError:
            columns[name] = np.array(vals, dtype=object)
    return meta, columns
