"""Binary state snapshots.

Layout (little-endian):
    magic   "FPME"  (4 bytes)
    u32     version = 1
    u32     dim
    u64     n
    f64     half_length, s, d1, d2, t
    f64[n^dim]  values, row-major

Round-trips are bit-exact on both metadata and values. Step counters and
clamp bookkeeping are run-local and not persisted.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import MagicMismatch, VersionUnsupported
from .fracops import SpectralPlan
from .grid import Field, FracOrder, GridSpec
from .solver import DiffusivitySpec, SolverState

__all__ = ["write_snapshot", "read_snapshot", "snapshot_metadata"]

_MAGIC = b"FPME"
_VERSION = 1
_HEADER = struct.Struct("<4sIIQ5d")


def write_snapshot(state: SolverState, path: str) -> None:
    g = state.grid
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        g.dim,
        g.n,
        g.half_length,
        state.s.s,
        state.diff.d1,
        state.diff.d2,
        state.t,
    )
    values = np.ascontiguousarray(state.u.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.tobytes())


def _read_header(data: bytes):
    if len(data) < 4 or data[:4] != _MAGIC:
        raise MagicMismatch("not a FPME snapshot")
    if len(data) < _HEADER.size:
        raise VersionUnsupported("snapshot header is truncated")
    magic, version, dim, n, half_length, s, d1, d2, t = _HEADER.unpack(
        data[: _HEADER.size]
    )
    if version != _VERSION:
        raise VersionUnsupported(f"snapshot version {version} not supported")
    return dim, n, half_length, s, d1, d2, t


def snapshot_metadata(path: str) -> dict:
    with open(path, "rb") as fh:
        data = fh.read(_HEADER.size)
    dim, n, half_length, s, d1, d2, t = _read_header(data)
    return {
        "dim": dim,
        "n": n,
        "half_length": half_length,
        "s": s,
        "d1": d1,
        "d2": d2,
        "t": t,
    }


def read_snapshot(path: str) -> SolverState:
    with open(path, "rb") as fh:
        data = fh.read()
    dim, n, half_length, s, d1, d2, t = _read_header(data)
    expected = _HEADER.size + 8 * n**dim
    if len(data) != expected:
        raise VersionUnsupported(
            f"snapshot payload has {len(data)} bytes, expected {expected}"
        )
    values = np.frombuffer(data, dtype="<f8", count=n**dim, offset=_HEADER.size)
    grid = GridSpec(dim=int(dim), n=int(n), half_length=half_length)
    return SolverState(
        u=Field(grid, values.copy()),
        t=t,
        step_count=0,
        diff=DiffusivitySpec(d1, d2),
        s=FracOrder(s, int(dim)),
        plan=SpectralPlan(grid),
    )
