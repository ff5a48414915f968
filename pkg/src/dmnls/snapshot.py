"""Binary snapshot files.

Layout (little-endian): magic ``DMNLS1`` (6 bytes), u32 ``n``, f64 ``length``,
f64 ``t``, then ``n`` interleaved ``(re, im)`` f64 pairs.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .grid import ComplexField, SpatialGrid

MAGIC = b"DMNLS1"
_HEADER = struct.Struct("<6sIdd")


class SnapshotError(ValueError):
    pass


def snapshot_write(field: ComplexField, t: float, path: str | os.PathLike) -> None:
    if not field.is_finite():
        raise SnapshotError("refusing to write non-finite samples")
    g = field.grid
    payload = np.ascontiguousarray(field.values, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.n, g.length, float(t)))
        fh.write(payload)


def snapshot_read(path: str | os.PathLike) -> tuple[ComplexField, float]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise SnapshotError(f"{path}: file too short for header ({len(data)} bytes)")
    magic, n, length, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 16 * n
    if len(data) != expected:
        raise SnapshotError(f"{path}: length mismatch, expected {expected} bytes, got {len(data)}")
    values = np.frombuffer(data, dtype="<c16", offset=_HEADER.size, count=n).astype(complex)
    if not np.all(np.isfinite(values)):
        raise SnapshotError(f"{path}: non-finite payload")
    return ComplexField(SpatialGrid(n, length), values), t
