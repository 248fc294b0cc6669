"""Serialization of run artifacts.

All tables carry a ``schema_version`` column.  Floats are written with
``repr`` (shortest round-trip form) and non-finite values as empty cells in
CSV and ``null`` in JSON, so identical runs give byte-identical files.

CSV schemas, version 1:

``estimates.csv``
    schema_version, instance, nx, ny, inequality, k, lhs, rhs, slack, margin, passed
``residuals.csv``
    schema_version, instance, nx, ny, test_function, kind, k, value, slack, passed
``solve.csv``
    schema_version, instance, nx, ny, scheme, converged, iterations, final_residual,
    final_update, linf_u, linf_f_n, linf_bound_check, final_damping, error
``sequence.csv``
    schema_version, instance, nx, ny, n, converged, iterations, f_err_l2, du_l2,
    dgrad_l1, error
``convergence.csv``
    schema_version, instance, nx, ny, h, error_l2, order, iterations
``nested.csv``
    schema_version, instance, nx, ny, h, delta_l2, order
``levels.csv``
    same columns as ``solve.csv``, one row per grid level

``margin`` is ``rhs - lhs``; ``passed`` is ``lhs <= rhs + slack``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

SCHEMA_VERSION = 1

COLUMNS = {
    "estimates": ["schema_version", "instance", "nx", "ny", "inequality", "k", "lhs", "rhs", "slack",
                  "margin", "passed"],
    "residuals": ["schema_version", "instance", "nx", "ny", "test_function", "kind", "k", "value",
                  "slack", "passed"],
    "solve": ["schema_version", "instance", "nx", "ny", "scheme", "converged", "iterations",
              "final_residual", "final_update", "linf_u", "linf_f_n", "linf_bound_check",
              "final_damping", "error"],
    "sequence": ["schema_version", "instance", "nx", "ny", "n", "converged", "iterations", "f_err_l2",
                 "du_l2", "dgrad_l1", "error"],
    "convergence": ["schema_version", "instance", "nx", "ny", "h", "error_l2", "order", "iterations"],
    "nested": ["schema_version", "instance", "nx", "ny", "h", "delta_l2", "order"],
}
COLUMNS["levels"] = COLUMNS["solve"]


def clean(obj):
    """Recursively convert to JSON-safe builtins (non-finite floats become ``None``)."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()  # numpy scalar
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _cell(v):
    v = clean(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(table, rows):
    """Render ``rows`` (dicts) under the columns of ``table``; missing keys are empty."""
    columns = COLUMNS[table]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        row = {"schema_version": SCHEMA_VERSION, **row}
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def json_text(obj):
    return json.dumps(clean(obj), indent=2, allow_nan=False) + "\n"


def write_table(directory, table, rows, fmt="csv"):
    """Write ``<table>.csv`` or ``<table>.json`` into ``directory``."""
    if fmt == "csv":
        return atomic_write(Path(directory) / f"{table}.csv", csv_text(table, rows))
    if fmt == "json":
        payload = {"schema_version": SCHEMA_VERSION, "table": table, "columns": COLUMNS[table],
                   "rows": [{"schema_version": SCHEMA_VERSION, **r} for r in rows]}
        return atomic_write(Path(directory) / f"{table}.json", json_text(payload))
    raise ValueError(f"unknown format {fmt!r}")


def write_json(path, obj):
    return atomic_write(path, json_text(obj))


def read_table(path):
    """Load a table written by :func:`write_table` as a list of string/None dicts."""
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text())["rows"]
    with path.open(newline="") as fh:
        return [{k: (v if v != "" else None) for k, v in row.items()} for row in csv.DictReader(fh)]
