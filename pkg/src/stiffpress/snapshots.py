"""Binary snapshot files.

Layout, all little-endian:

    b"STPR1"
    dim            uint32
    n_cells[dim]   uint32
    lo[dim], hi[dim]  float64
    bc             uint8   (0 periodic, 1 dirichlet_zero)
    count          uint32
    count times:  t float64, density[prod(n_cells)] float64, pressure[...] float64

Arrays are stored row-major (C order) in the grid's ij layout.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import BC, Field, Grid
from .errors import ConfigError
from .solver import Snapshot

MAGIC = b"STPR1"
_BC_CODES = {BC.PERIODIC: 0, BC.DIRICHLET_ZERO: 1}
_BC_FROM = {v: k for k, v in _BC_CODES.items()}


def encode(grid: Grid, snapshots: Sequence[Snapshot]) -> bytes:
    d = grid.dim
    parts = [MAGIC, struct.pack(f"<I{d}I", d, *grid.n_cells),
             struct.pack(f"<{d}d{d}d", *grid.lo, *grid.hi),
             struct.pack("<BI", _BC_CODES[grid.bc], len(snapshots))]
    for s in snapshots:
        parts.append(struct.pack("<d", s.t))
        parts.append(np.ascontiguousarray(s.density.values, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(s.pressure.values, dtype="<f8").tobytes())
    return b"".join(parts)


def decode(data: bytes) -> tuple[Grid, list[Snapshot]]:
    if data[:5] != MAGIC:
        raise ConfigError("not a snapshot file (bad magic)")
    off = 5
    (d,) = struct.unpack_from("<I", data, off)
    off += 4
    if d not in (1, 2):
        raise ConfigError(f"snapshot file has unsupported dimension {d}")
    n_cells = struct.unpack_from(f"<{d}I", data, off)
    off += 4 * d
    bounds = struct.unpack_from(f"<{2 * d}d", data, off)
    off += 16 * d
    bc_code, count = struct.unpack_from("<BI", data, off)
    off += 5
    grid = Grid(tuple(bounds[:d]), tuple(bounds[d:]), tuple(n_cells), _BC_FROM[bc_code])
    size = int(np.prod(n_cells))
    expected = off + count * (8 + 16 * size)
    if len(data) != expected:
        raise ConfigError(f"snapshot file has {len(data)} bytes, expected {expected}")
    snaps = []
    for _ in range(count):
        (t,) = struct.unpack_from("<d", data, off)
        off += 8
        dens = np.frombuffer(data, "<f8", size, off).reshape(grid.shape)
        off += 8 * size
        pres = np.frombuffer(data, "<f8", size, off).reshape(grid.shape)
        off += 8 * size
        snaps.append(Snapshot(t, Field(grid, dens.astype(float)), Field(grid, pres.astype(float))))
    return grid, snaps


def write(path, grid: Grid, snapshots: Sequence[Snapshot]) -> None:
    Path(path).write_bytes(encode(grid, snapshots))


def read(path) -> tuple[Grid, list[Snapshot]]:
    return decode(Path(path).read_bytes())
