"""Deterministic CSV/JSON writers shared by the CLI and the scripts."""

from __future__ import annotations

import json
import math
from typing import IO, Any, Mapping

import numpy as np


def format_value(x: Any) -> str:
    """Shortest round-trip text for a scalar; booleans as 0/1."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def jsonable(obj: Any) -> Any:
    """Convert numpy containers and non-finite floats into plain JSON values."""
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def meta_line(meta: Mapping[str, Any]) -> str:
    return "# meta: " + json.dumps(jsonable(meta), sort_keys=True, separators=(",", ":"))


def write_csv(stream: IO[str], columns: Mapping[str, np.ndarray], meta: Mapping[str, Any]) -> None:
    names = list(columns)
    data = [np.asarray(columns[n]).ravel() for n in names]
    lengths = {len(d) for d in data}
    if len(lengths) > 1:
        raise ValueError(f"columns differ in length: {dict(zip(names, map(len, data)))}")
    stream.write(meta_line(meta) + "\n")
    stream.write(",".join(names) + "\n")
    for row in zip(*data):
        stream.write(",".join(format_value(x) for x in row) + "\n")


def write_json(stream: IO[str], payload: Mapping[str, Any]) -> None:
    stream.write(json.dumps(jsonable(payload), sort_keys=True, indent=2) + "\n")


def read_csv(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Inverse of :func:`write_csv` for numeric tables."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# meta: "):
            raise ValueError("missing '# meta:' header")
        meta = json.loads(first[len("# meta: "):])
        names = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    cols = {n: np.array([float(r[i]) for r in rows]) for i, n in enumerate(names)}
    return meta, cols
