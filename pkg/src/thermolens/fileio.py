"""Energy time series (CSV), binary field snapshots and the run sidecar.

Snapshot layout: a 16-byte header (``b"TLNS"``, u8 dims, u8 dtype code,
u16 reserved, two u32 node counts with the second 0 in 1D) followed by
little-endian float64 values in row-major order.
"""
import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .energy import CSV_COLUMNS, EnergyReport

MAGIC = b"TLNS"
DTYPE_F64 = 1
_HEADER = struct.Struct("<4sBBHII")


class OutputError(OSError):
    """I/O failure carrying the offending path."""

    def __init__(self, message, path):
        super().__init__(f"{path}: {message}")
        self.path = Path(path)


def _fmt(x):
    return "%.17g" % x


def write_timeseries(reports, path):
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for rep in reports:
                writer.writerow([_fmt(getattr(rep, c)) for c in CSV_COLUMNS])
    except OSError as exc:
        raise OutputError(exc.strerror or str(exc), path) from exc


def read_timeseries(path):
    """Reports from a CSV written by :func:`write_timeseries`."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OutputError(exc.strerror or str(exc), path) from exc
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise OutputError(f"not an energy series (expected header {','.join(CSV_COLUMNS)})", path)
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(CSV_COLUMNS):
            raise OutputError(f"line {lineno}: expected {len(CSV_COLUMNS)} columns", path)
        try:
            out.append(EnergyReport(**{c: float(v) for c, v in zip(CSV_COLUMNS, row)}))
        except ValueError as exc:
            raise OutputError(f"line {lineno}: {exc}", path) from exc
    return out


def write_snapshot(field, path):
    field = np.asarray(field, dtype="<f8")
    if field.ndim not in (1, 2):
        raise ValueError("snapshots hold 1D or 2D fields")
    n = field.shape + (0,) * (2 - field.ndim)
    header = _HEADER.pack(MAGIC, field.ndim, DTYPE_F64, 0, *n)
    path = Path(path)
    try:
        with path.open("wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(field).tobytes(order="C"))
    except OSError as exc:
        raise OutputError(exc.strerror or str(exc), path) from exc


def read_snapshot(path):
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise OutputError(exc.strerror or str(exc), path) from exc
    if len(data) < _HEADER.size:
        raise OutputError("truncated snapshot header", path)
    magic, dims, dtype, _, n0, n1 = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise OutputError(f"bad magic {magic!r}", path)
    if dtype != DTYPE_F64 or dims not in (1, 2):
        raise OutputError(f"unsupported snapshot (dims={dims}, dtype={dtype})", path)
    shape = (n0,) if dims == 1 else (n0, n1)
    count = math.prod(shape)
    if len(data) != _HEADER.size + 8 * count:
        raise OutputError(f"payload size does not match shape {shape}", path)
    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(shape).astype(float)


def write_sidecar(meta, path):
    """Run metadata (timestamps, versions, diagnostics) kept apart from the data files."""
    path = Path(path)
    try:
        path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_jsonable) + "\n")
    except OSError as exc:
        raise OutputError(exc.strerror or str(exc), path) from exc


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)
