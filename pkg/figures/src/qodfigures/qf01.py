"""Reader/writer for QF01 field snapshots.

Five ASCII header lines (`QF01`, `Mx My`, `Lx Ly`, `time t`, `planes 2`)
followed by two row-major planes of little-endian float64 (re, im) pairs,
H first then V.  Reading recovers the writer's bytes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = "QF01"


class QF01FormatError(ValueError):
    pass


@dataclass
class FieldSnapshot:
    mx: int
    my: int
    lx: float
    ly: float
    time: float
    h: np.ndarray
    v: np.ndarray

    def density(self) -> np.ndarray:
        """|c|^2 summed over both polarization planes."""
        return np.abs(self.h) ** 2 + np.abs(self.v) ** 2


def read_qf01(path: str | Path) -> FieldSnapshot:
    raw = Path(path).read_bytes()
    pos = 0
    lines = []
    try:
        for _ in range(5):
            end = raw.index(b"\n", pos)
            lines.append(raw[pos:end].decode("ascii"))
            pos = end + 1
    except (ValueError, UnicodeDecodeError) as exc:
        raise QF01FormatError(f"{path}: unreadable QF01 header") from exc
    if lines[0] != MAGIC:
        raise QF01FormatError(f"{path}: bad magic {lines[0]!r} (expected {MAGIC})")
    try:
        mx, my = (int(t) for t in lines[1].split())
        lx, ly = (float(t) for t in lines[2].split())
        t_tag, t_val = lines[3].split()
        p_tag, p_val = lines[4].split()
        assert t_tag == "time" and p_tag == "planes"
        time = float(t_val)
        planes = int(p_val)
    except (ValueError, AssertionError) as exc:
        raise QF01FormatError(f"{path}: malformed header {lines[1:]!r}") from exc
    if planes != 2:
        raise QF01FormatError(f"{path}: expected 2 planes, got {planes}")
    n = mx * my
    if len(raw) - pos != 2 * n * 16:
        raise QF01FormatError(
            f"{path}: expected {2 * n * 16} plane bytes, found {len(raw) - pos}"
        )
    data = np.frombuffer(raw, dtype="<c16", count=2 * n, offset=pos)
    return FieldSnapshot(mx, my, lx, ly, time, data[:n].reshape(mx, my), data[n:].reshape(mx, my))


def write_qf01(path: str | Path, snap: FieldSnapshot) -> None:
    header = (
        f"{MAGIC}\n{snap.mx} {snap.my}\n{snap.lx!r} {snap.ly!r}\n"
        f"time {snap.time!r}\nplanes 2\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(snap.h, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(snap.v, dtype="<c16").tobytes())
