"""CSV and JSON writers.  Every float is written with 17 significant digits."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .field import SpectralField, Trajectory


def fmt(x) -> str:
    return format(float(x), ".17g")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number, bool)) or v is None for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, Path):
        return json.dumps(str(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_field(path, f: SpectralField):
    rows = zip(f.grid.nodes, f.coeffs.real, f.coeffs.imag)
    write_csv(path, ["xi", "re", "im"], rows)


def write_trajectory(directory, traj: Trajectory, stem: str = "snapshot"):
    """One xi,re,im CSV per snapshot plus ``<stem>_index.json`` listing times and files."""
    directory = Path(directory)
    files = []
    for i, t in enumerate(traj.times):
        name = f"{stem}_{i:04d}.csv"
        write_field(directory / name, traj.field(i))
        files.append({"index": i, "t": float(t), "file": name})
    write_json(directory / f"{stem}_index.json", {"xi_max": traj.grid.xi_max, "n": traj.grid.n,
                                                  "real": traj.real, "snapshots": files})
