"""QF01 field snapshot files.

Layout: five ASCII header lines followed by raw plane data,

    QF01
    <Mx> <My>
    <Lx> <Ly>
    time <t>
    planes 2

then Mx*My little-endian float64 (re, im) pairs for the H plane in
row-major [ix, iy] order, then the same for the V plane.  Floats in the
header use the shortest round-trip decimal form, so writer output is
byte-reproducible and the reader recovers values bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .field import POSITION, GridSpec, PolarizedField

MAGIC = "QF01"


class QF01Error(ValueError):
    """Malformed QF01 header or truncated plane data."""


def write_qf01(path: str | Path, field: PolarizedField, time: float) -> None:
    grid = field.grid
    header = (
        f"{MAGIC}\n{grid.mx} {grid.my}\n{grid.lx!r} {grid.ly!r}\n"
        f"time {time!r}\nplanes 2\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(field.h, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(field.v, dtype="<c16").tobytes())


@dataclass
class Snapshot:
    grid: GridSpec
    time: float
    field: PolarizedField


def read_qf01(path: str | Path) -> Snapshot:
    raw = Path(path).read_bytes()
    try:
        pos = 0
        lines = []
        for _ in range(5):
            end = raw.index(b"\n", pos)
            lines.append(raw[pos:end].decode("ascii"))
            pos = end + 1
    except (ValueError, UnicodeDecodeError) as exc:
        raise QF01Error(f"{path}: unreadable header") from exc
    if lines[0] != MAGIC:
        raise QF01Error(f"{path}: bad magic {lines[0]!r}")
    try:
        mx, my = (int(t) for t in lines[1].split())
        lx, ly = (float(t) for t in lines[2].split())
        tag, tval = lines[3].split()
        ptag, pval = lines[4].split()
        if tag != "time" or ptag != "planes":
            raise ValueError
        time = float(tval)
        planes = int(pval)
    except ValueError as exc:
        raise QF01Error(f"{path}: malformed header lines {lines[1:]!r}") from exc
    if planes != 2:
        raise QF01Error(f"{path}: expected 2 planes, header says {planes}")
    n = mx * my
    need = 2 * n * 16
    if len(raw) - pos != need:
        raise QF01Error(f"{path}: expected {need} plane bytes, found {len(raw) - pos}")
    data = np.frombuffer(raw, dtype="<c16", count=2 * n, offset=pos)
    grid = GridSpec(mx, my, lx, ly)
    h = data[:n].reshape(mx, my).astype(complex)
    v = data[n:].reshape(mx, my).astype(complex)
    return Snapshot(grid, time, PolarizedField(grid, h, v, POSITION))
