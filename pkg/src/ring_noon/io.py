"""CSV tables and JSON sidecars with a fixed, reproducible layout."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

SCHEMA_VERSION = 1


class OutputError(OSError):
    pass


def _cell(value, row: int, column: str) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} in row {row}, column {column!r}")
        return "%.12g" % value
    if isinstance(value, str):
        return value
    raise TypeError(f"unsupported cell type {type(value).__name__} in row {row}, column {column!r}")


def emit_table(rows: Iterable, schema: Sequence[str], path) -> Path:
    """Write rows (mappings or sequences in schema order) as CSV.

    Floats use 12 significant digits and lines end with LF.  NaN or inf
    anywhere is refused before the file is touched.
    """
    schema = list(schema)
    if len(set(schema)) != len(schema):
        raise ValueError("schema has duplicate column names")
    body = []
    for i, row in enumerate(rows):
        if isinstance(row, Mapping):
            if set(row) != set(schema):
                raise ValueError(
                    f"row {i} keys {sorted(row)} do not match schema {schema}"
                )
            values = [row[c] for c in schema]
        else:
            values = list(row)
            if len(values) != len(schema):
                raise ValueError(f"row {i} has {len(values)} cells, schema has {len(schema)}")
        body.append([_cell(v, i, c) for v, c in zip(values, schema)])
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(schema)
            w.writerows(body)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def to_jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_sidecar(path, payload: Mapping) -> Path:
    path = Path(path)
    doc = {"schema_version": SCHEMA_VERSION, **to_jsonable(payload)}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path
