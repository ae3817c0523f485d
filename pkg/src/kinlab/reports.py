"""CSV/JSON/binary result serialization.

All floating-point output carries 17 significant digits so that files
round-trip float64 losslessly and identical runs produce byte-identical
artifacts.  CSVs are RFC-4180 style with a header row; snapshot files
reuse the collision-cache binary convention (ASCII header line, f64
little-endian payload, trailing f64 checksum).
"""

import csv
import json
import os
import struct

import numpy as np


def fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_json(path, payload):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


SNAP_MAGIC = "kinlab-snapshot"


def write_snapshot(path, state):
    """Kinetic snapshot: header (t, eps, grid, K) + complex coeffs + checksum."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    c = np.ascontiguousarray(state.coeffs, dtype="<c16")
    view = c.view("<f8")
    checksum = float(np.sum(view))
    header = (
        f"{SNAP_MAGIC} 1 t={state.time!r} eps={state.eps!r} d={state.grid.d} "
        f"n={state.grid.n} box={state.grid.box!r} K={state.basis.K} "
        f"nv={state.basis.size}\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(c.tobytes())
        fh.write(struct.pack("<d", checksum))


def read_snapshot(path, grid, basis):
    from .grids import KineticState

    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip().split()
        if header[0] != SNAP_MAGIC:
            raise ValueError(f"{path}: not a snapshot file")
        meta = dict(kv.split("=", 1) for kv in header[2:])
        payload = fh.read()
    coeffs = np.frombuffer(payload[:-8], dtype="<c16").reshape(
        grid.shape + (basis.size,)
    ).copy()
    stored = struct.unpack("<d", payload[-8:])[0]
    if float(np.sum(coeffs.view("<f8"))) != stored:
        raise ValueError(f"{path}: snapshot checksum mismatch")
    eps = None if meta["eps"] == "None" else float(meta["eps"])
    return KineticState(grid=grid, basis=basis, coeffs=coeffs,
                        time=float(meta["t"]), eps=eps)
