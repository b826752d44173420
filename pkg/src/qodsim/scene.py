"""Optical benches as atom arrays, and the scene-description DSL.

Objects are slabs of two-level atoms placed one per grid point:

* tilt 0   -- line of `n_line` atoms along y, `layers` stacked along +x
* tilt 90  -- line along x, layers stacked along +y
* tilt 45  -- line along the (+1,+1) diagonal, layers on successive
              diagonals shifted along +x (requires square cells)

Mirrors, beamsplitters, phase shifters and scatterers couple to both
polarizations with the same strength D; a pbs couples only to V; a
rotator is a stack of half-wave-plate atoms that couple only on their
slow axis, with the axis at angle Theta = theta_rot/2 + theta_pol from
the horizontal.

DSL (one directive per line, `#` starts a comment):

    grid <Mx> <My> box <Lx> <Ly>
    mirror|beamsplitter|phaseshifter|scatterer|pbs at <x> <y> tilt <deg>
        line <n> layers <n> D <v> omega <v>
    rotator at <x> <y> [tilt <deg>] line <n> layers <n> Ds <v> omega <v>
        theta_rot <rad> theta_pol <rad>
    region <name> <x0> <y0> <x1> <y1>
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .field import GridSpec, Region

SLAB_KINDS = ("mirror", "beamsplitter", "phaseshifter", "scatterer", "pbs")


class SceneError(ValueError):
    """Invalid scene construction (off-grid object, duplicate occupancy...)."""


class SceneParseError(SceneError):
    """DSL parse failure; the message carries the offending line number."""


@dataclass(frozen=True)
class Atom:
    """One two-level atom at a grid point.

    `axis is None` marks a fixed-coupling atom with strengths (d_h, d_v);
    otherwise the atom is waveplate-type with slow-axis coupling d_s at
    axis angle `axis` and zero coupling on the fast axis.
    """

    ix: int
    iy: int
    omega: float
    d_h: float = 0.0
    d_v: float = 0.0
    axis: float | None = None
    d_s: float = 0.0

    def __post_init__(self):
        if self.omega <= 0:
            raise SceneError(f"atom omega must be positive, got {self.omega}")
        if min(self.d_h, self.d_v, self.d_s) < 0:
            raise SceneError("atom couplings must be nonnegative")


@dataclass(frozen=True)
class ObjectSpec:
    """One DSL object directive; `d` holds Ds for rotators."""

    kind: str
    x: float
    y: float
    tilt: float
    line: int
    layers: int
    d: float
    omega: float
    theta_rot: float | None = None
    theta_pol: float | None = None


def _slab_indices(
    grid: GridSpec, x: float, y: float, tilt: float, n_line: int, layers: int
) -> list[tuple[int, int]]:
    if n_line < 1:
        raise SceneError(f"line count must be >= 1, got {n_line}")
    if layers < 0:
        raise SceneError(f"layer count must be >= 0, got {layers}")
    if tilt not in (0.0, 45.0, 90.0):
        raise SceneError(f"unsupported tilt {tilt} (0, 45 and 90 degrees supported)")
    if tilt == 45.0 and not np.isclose(grid.dx, grid.dy):
        raise SceneError("45-degree slabs require square grid cells")
    ic, jc = x / grid.dx, y / grid.dy
    out: list[tuple[int, int]] = []
    if tilt == 0.0:
        i0 = round(ic - (layers - 1) / 2)
        j0 = round(jc - (n_line - 1) / 2)
        out = [(i0 + m, j0 + n) for m in range(layers) for n in range(n_line)]
    elif tilt == 90.0:
        i0 = round(ic - (n_line - 1) / 2)
        j0 = round(jc - (layers - 1) / 2)
        out = [(i0 + n, j0 + m) for m in range(layers) for n in range(n_line)]
    else:
        # line along (+1,+1); layers step along the normal (+1,-1)
        i0 = round(ic - (n_line - 1) / 2 - (layers - 1) / 2)
        j0 = round(jc - (n_line - 1) / 2 + (layers - 1) / 2)
        out = [(i0 + n + m, j0 + n - m) for m in range(layers) for n in range(n_line)]
    for ix, iy in out:
        if not (0 <= ix < grid.mx and 0 <= iy < grid.my):
            raise SceneError(
                f"object at ({x}, {y}) falls off the grid (index {ix},{iy})"
            )
    return out


def build_slab(
    grid: GridSpec,
    kind: str,
    center: tuple[float, float],
    tilt: float,
    n_line: int,
    layers: int,
    d: float,
    omega: float,
) -> list[Atom]:
    """Atoms of a mirror/beamsplitter/phase-shifter/scatterer/pbs slab."""
    if kind not in SLAB_KINDS:
        raise SceneError(f"unknown slab kind {kind!r}")
    d_h, d_v = (0.0, d) if kind == "pbs" else (d, d)
    idx = _slab_indices(grid, center[0], center[1], tilt, n_line, layers)
    return [Atom(ix, iy, omega, d_h, d_v) for ix, iy in idx]


def build_rotator(
    grid: GridSpec,
    center: tuple[float, float],
    theta_rot: float,
    theta_pol: float,
    n_line: int,
    layers: int,
    d_s: float,
    omega: float,
    tilt: float = 0.0,
) -> list[Atom]:
    """Half-wave-plate stack rotating linear polarization by theta_rot."""
    if layers < 1:
        raise SceneError("rotator needs at least one layer")
    if tilt not in (0.0, 90.0):
        raise SceneError("rotators support tilt 0 or 90 only")
    axis = theta_rot / 2.0 + theta_pol
    idx = _slab_indices(grid, center[0], center[1], tilt, n_line, layers)
    return [Atom(ix, iy, omega, axis=axis, d_s=d_s) for ix, iy in idx]


def _build_object(grid: GridSpec, spec: ObjectSpec) -> list[Atom]:
    if spec.kind == "rotator":
        return build_rotator(
            grid,
            (spec.x, spec.y),
            spec.theta_rot,
            spec.theta_pol,
            spec.line,
            spec.layers,
            spec.d,
            spec.omega,
            tilt=spec.tilt,
        )
    return build_slab(
        grid, spec.kind, (spec.x, spec.y), spec.tilt, spec.line, spec.layers,
        spec.d, spec.omega,
    )


@dataclass(frozen=True)
class Scene:
    """Immutable bench: grid, ordered atoms, named regions, object metadata."""

    grid: GridSpec
    atoms: tuple[Atom, ...]
    objects: tuple[ObjectSpec, ...] = ()
    regions: dict[str, Region] | None = None

    def __post_init__(self):
        object.__setattr__(self, "regions", dict(self.regions or {}))
        seen: set[tuple[int, int]] = set()
        for a in self.atoms:
            if not (0 <= a.ix < self.grid.mx and 0 <= a.iy < self.grid.my):
                raise SceneError(f"atom index ({a.ix},{a.iy}) off the grid")
            if (a.ix, a.iy) in seen:
                raise SceneError(f"duplicate atom occupancy at index ({a.ix},{a.iy})")
            seen.add((a.ix, a.iy))

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def dsl_hash(self) -> str:
        return hashlib.sha256(serialize_scene(self).encode()).hexdigest()


def scene_from_specs(
    grid: GridSpec,
    specs: list[ObjectSpec] | tuple[ObjectSpec, ...] = (),
    regions: dict[str, Region] | None = None,
) -> Scene:
    atoms: list[Atom] = []
    for spec in specs:
        atoms.extend(_build_object(grid, spec))
    return Scene(grid, tuple(atoms), tuple(specs), regions)


def _take_float(tokens: dict[str, str], key: str, line_no: int) -> float:
    if key not in tokens:
        raise SceneParseError(f"line {line_no}: missing '{key}'")
    raw = tokens.pop(key)
    try:
        return float(raw)
    except ValueError:
        raise SceneParseError(
            f"line {line_no}: malformed number {raw!r} for '{key}'"
        ) from None


def _take_int(tokens: dict[str, str], key: str, line_no: int) -> int:
    raw = tokens.get(key)
    val = _take_float(tokens, key, line_no)
    if val != int(val):
        raise SceneParseError(f"line {line_no}: '{key}' must be an integer, got {raw}")
    return int(val)


def parse_scene(text: str) -> Scene:
    """Compile DSL text into a Scene; errors carry 1-based line numbers."""
    grid: GridSpec | None = None
    specs: list[ObjectSpec] = []
    regions: dict[str, Region] = {}
    occupied: set[tuple[int, int]] = set()
    atoms: list[Atom] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]

        if head == "grid":
            if grid is not None:
                raise SceneParseError(f"line {line_no}: duplicate grid directive")
            if len(parts) != 6 or parts[3] != "box":
                raise SceneParseError(
                    f"line {line_no}: expected 'grid <Mx> <My> box <Lx> <Ly>'"
                )
            try:
                grid = GridSpec(int(parts[1]), int(parts[2]), float(parts[4]), float(parts[5]))
            except ValueError as exc:
                raise SceneParseError(f"line {line_no}: {exc}") from None
            continue

        if grid is None:
            raise SceneParseError(f"line {line_no}: grid directive must come first")

        if head == "region":
            if len(parts) != 6:
                raise SceneParseError(
                    f"line {line_no}: expected 'region <name> <x0> <y0> <x1> <y1>'"
                )
            name = parts[1]
            if name in regions:
                raise SceneParseError(f"line {line_no}: duplicate region name {name!r}")
            try:
                x0, y0, x1, y1 = (float(t) for t in parts[2:])
                regions[name] = Region(x0, y0, x1, y1)
            except ValueError as exc:
                raise SceneParseError(f"line {line_no}: {exc}") from None
            continue

        if head not in SLAB_KINDS and head != "rotator":
            raise SceneParseError(f"line {line_no}: unknown directive {head!r}")

        if len(parts) < 4 or parts[1] != "at" or len(parts) % 2 != 0:
            raise SceneParseError(
                f"line {line_no}: expected '{head} at <x> <y> <key> <value> ...'"
            )
        kv = dict(zip(parts[4::2], parts[5::2]))
        if len(kv) != (len(parts) - 4) // 2:
            raise SceneParseError(f"line {line_no}: repeated keyword")
        try:
            x, y = float(parts[2]), float(parts[3])
        except ValueError:
            raise SceneParseError(f"line {line_no}: malformed position") from None
        tilt = _take_float(kv, "tilt", line_no) if "tilt" in kv else 0.0
        n_line = _take_int(kv, "line", line_no)
        layers = _take_int(kv, "layers", line_no)
        if head == "rotator":
            spec = ObjectSpec(
                "rotator", x, y, tilt, n_line, layers,
                _take_float(kv, "Ds", line_no), _take_float(kv, "omega", line_no),
                theta_rot=_take_float(kv, "theta_rot", line_no),
                theta_pol=_take_float(kv, "theta_pol", line_no),
            )
        else:
            spec = ObjectSpec(
                head, x, y, tilt, n_line, layers,
                _take_float(kv, "D", line_no), _take_float(kv, "omega", line_no),
            )
        if kv:
            raise SceneParseError(f"line {line_no}: unknown keyword {next(iter(kv))!r}")
        try:
            new_atoms = _build_object(grid, spec)
        except SceneError as exc:
            raise SceneParseError(f"line {line_no}: {exc}") from None
        for a in new_atoms:
            if (a.ix, a.iy) in occupied:
                raise SceneParseError(
                    f"line {line_no}: duplicate atom occupancy at index ({a.ix},{a.iy})"
                )
            occupied.add((a.ix, a.iy))
        atoms.extend(new_atoms)
        specs.append(spec)

    if grid is None:
        raise SceneParseError("line 1: missing grid directive")
    return Scene(grid, tuple(atoms), tuple(specs), regions)


def serialize_scene(scene: Scene) -> str:
    """Emit the same DSL dialect; parse_scene(serialize_scene(s)) == s."""
    g = scene.grid
    lines = [f"grid {g.mx} {g.my} box {g.lx!r} {g.ly!r}"]
    for o in scene.objects:
        if o.kind == "rotator":
            lines.append(
                f"rotator at {o.x!r} {o.y!r} tilt {o.tilt!r} line {o.line} "
                f"layers {o.layers} Ds {o.d!r} omega {o.omega!r} "
                f"theta_rot {o.theta_rot!r} theta_pol {o.theta_pol!r}"
            )
        else:
            lines.append(
                f"{o.kind} at {o.x!r} {o.y!r} tilt {o.tilt!r} line {o.line} "
                f"layers {o.layers} D {o.d!r} omega {o.omega!r}"
            )
    for name in scene.regions:
        r = scene.regions[name]
        lines.append(f"region {name} {r.x0!r} {r.y0!r} {r.x1!r} {r.y1!r}")
    return "\n".join(lines) + "\n"
