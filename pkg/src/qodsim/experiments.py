"""The bench experiments: config handling, scene recipes, sweep runners.

Every runner reproduces one of the bench setups (all lengths in natural
units, dt defaults to 0.1, packet width sigma = 2 unless noted):

mz          Mach-Zehnder square with 16-unit arms; P_right vs the
            calibrated phase-shifter phase follows cos^2(phi/2).
scatterer   4x4 obstacle offset from the beam axis; detector-window
            error-rate families (edge window of depth 2 plus a deep
            window capturing the full packet).
hom         two photons meeting at a 50/50 splitter; coincidence dip
            vs packet displacement.
chsh        polarization-entangled pair, one analyzer (half-wave plate
            stack + polarizing splitter) per arm; S from four
            analyzer-angle pairs per sweep point.
pol         single rotator + polarizing splitter; P_V follows
            sin^2(theta_rot).
stability   tilted-mirror bounce; norm and energy traces per integrator.

Sweep points are independent; with threads > 1 they are distributed over
a process pool, and rows are always assembled in sweep order so results
do not depend on the worker count.
"""

from __future__ import annotations

import hashlib
import json
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .field import (
    GridSpec,
    Region,
    gaussian_packet,
    number_density,
    region_probability,
)
from .field import atom_occupation
from .evolution import Rk4Stepper, TrotterStepper, energy, free_evolve
from .multiphoton import (
    ProductState,
    bell_initial,
    bunching_at_atoms,
    coincidence_overlap,
    evolve_step,
    hom_initial,
    joint_polarization_probs,
)
from .qf01 import write_qf01
from .scene import ObjectSpec, Scene, scene_from_specs, serialize_scene

EXPERIMENT_NAMES = ("mz", "scatterer", "hom", "chsh", "pol", "stability")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


class NumericalError(RuntimeError):
    """NaN detected in the evolving state."""


@dataclass
class SweepSpec:
    name: str
    start: float
    stop: float
    step: float

    def values(self) -> np.ndarray:
        if self.step <= 0:
            raise ConfigError(f"sweep.step must be positive, got {self.step}")
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        if n < 1:
            raise ConfigError("sweep range is empty")
        return self.start + self.step * np.arange(n)


@dataclass
class ExperimentConfig:
    experiment: str
    dt: float = 0.1
    steps: int | None = None
    integrator: str = "trotter"
    out_dir: Path = Path("out")
    snapshot_every: int = 0
    sweep: SweepSpec | None = None
    scene: str | None = None          # DSL file path (stability override)
    calibration: str | None = None    # layers->phi table (mz)
    c: float = 1.0                    # chsh entanglement weight
    theta: float = np.pi / 8          # chsh fixed angle for c sweeps
    offsets: list[tuple[float, float]] | None = None  # scatterer placements
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_NAMES:
            raise ConfigError(
                f"experiment must be one of {EXPERIMENT_NAMES}, got {self.experiment!r}"
            )
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.steps is not None and self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.integrator not in ("trotter", "rk4"):
            raise ConfigError(f"integrator must be trotter or rk4, got {self.integrator!r}")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        self.out_dir = Path(self.out_dir)

    @classmethod
    def from_json(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, **overrides)

    @classmethod
    def from_dict(cls, raw: dict, **overrides) -> "ExperimentConfig":
        known = {
            "experiment", "dt", "steps", "integrator", "out_dir",
            "snapshot_every", "sweep", "scene", "calibration", "c",
            "theta", "offsets", "threads",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(raw)
        data.update(overrides)
        if "experiment" not in data:
            raise ConfigError("missing required key 'experiment'")
        sweep = data.get("sweep")
        if sweep is not None:
            for k in ("name", "from", "to", "step"):
                if k not in sweep:
                    raise ConfigError(f"sweep is missing key {k!r}")
            data["sweep"] = SweepSpec(
                sweep["name"], float(sweep["from"]), float(sweep["to"]), float(sweep["step"])
            )
        if data.get("offsets") is not None:
            data["offsets"] = [
                tuple(map(float, o)) if o is not None else None for o in data["offsets"]
            ]
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


class ResultSeries:
    """Rectangular named-column table with run metadata."""

    def __init__(self, columns: list[str], metadata: dict | None = None):
        if len(set(columns)) != len(columns):
            raise ValueError("column names must be unique")
        self.columns = list(columns)
        self.rows: list[tuple] = []
        self.metadata = dict(metadata or {})

    def add_row(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        def fmt(v):
            if isinstance(v, float):
                return repr(float(v))  # plain shortest round-trip form
            return str(v)

        lines = [",".join(self.columns)]
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def _check_finite(state, step_idx: int) -> None:
    if step_idx % 100 != 0:
        return
    if isinstance(state, ProductState):
        fields = [f.field.h for f in state.factors.values()]
    else:
        fields = [state.field.h, state.field.v]
    for arr in fields:
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"non-finite amplitudes at step {step_idx}")


def _evolve_single(state, scene, dt, steps, integrator="trotter", snapshot_cb=None):
    stepper = (TrotterStepper if integrator == "trotter" else Rk4Stepper)(scene, dt)
    for i in range(1, steps + 1):
        stepper.step(state)
        _check_finite(state, i)
        if snapshot_cb:
            snapshot_cb(state, i)
    return state


def _evolve_product(state: ProductState, scene, dt, steps, snapshot_cb=None):
    stepper = TrotterStepper(scene, dt)
    peak_bunching = 0.0
    for i in range(1, steps + 1):
        evolve_step(state, stepper)
        _check_finite(state, i)
        peak_bunching = max(peak_bunching, bunching_at_atoms(state, scene))
        if snapshot_cb:
            snapshot_cb(state, i)
    return state, peak_bunching


def _effective_threads(cfg):
    return 1 if cfg.snapshot_every > 0 else cfg.threads


# ---------------------------------------------------------------------------
# bench recipes

SIGMA = 2.0


def mz_scene(ps_layers: int) -> Scene:
    box = 10 * np.pi
    g = GridSpec(256, 256, box, box)
    x0 = y0 = 7.7
    arm = 16.0
    specs = [
        ObjectSpec("beamsplitter", x0, y0, 45.0, 88, 1, 2.8, 0.31),
        ObjectSpec("mirror", x0, y0 + arm, 45.0, 88, 8, 0.56, 5.0),
        ObjectSpec("mirror", x0 + arm, y0, 45.0, 88, 8, 0.56, 5.0),
        ObjectSpec("beamsplitter", x0 + arm, y0 + arm, 45.0, 88, 1, 2.8, 0.31),
    ]
    if ps_layers > 0:
        specs.append(ObjectSpec("phaseshifter", x0 + arm / 2, y0 + arm, 0.0, 120, ps_layers, 0.56, 1.0))
    # outlet windows wrap around the periodic box edge past BS2
    regions = {
        "right_a": Region(29.1, 15.0, box, box),
        "right_b": Region(0.0, 15.0, 14.0, box),
        "up_a": Region(15.0, 29.1, box, box),
        "up_b": Region(15.0, 0.0, box, 14.0),
    }
    return scene_from_specs(g, specs, regions)


MZ_START = (1.7, 7.7)
MZ_KBAR = (10.0, 0.0)
MZ_TIME = 46.0

PS_CAL_TIME = 20.0


def scatterer_scene(dx: float | None, dy: float = 0.0) -> Scene:
    g = GridSpec(512, 256, 20 * np.pi, 10 * np.pi)
    cx, cy = 10 * np.pi, 5 * np.pi
    specs = []
    if dx is not None:
        specs.append(ObjectSpec("scatterer", cx + dx, cy + dy, 0.0, 4, 4, 1.0, 5.0))
    return scene_from_specs(g, specs)


SCAT_START = (2.0, 5 * np.pi)
SCAT_KBAR = (10.0, 0.0)
SCAT_TIME = 58.0
SCAT_EDGE_X0 = 60.8     # depth-2 window at the right edge (fringe-resolving)
SCAT_FULL_X0 = 44.0     # deep window capturing the whole packet...
SCAT_FULL_WRAP = 6.0    # ...continued across the periodic edge
SCAT_OFFSETS = [None, (-7.4, 0.0), (7.4, 0.0), (11.0, 0.0), (7.4, 0.6), (7.4, 1.2)]


def hom_scene(with_bs: bool = True) -> Scene:
    box = 15 * np.pi
    g = GridSpec(384, 384, box, box)
    specs = []
    if with_bs:
        specs.append(ObjectSpec("beamsplitter", box / 2, box / 2, 45.0, 128, 1, 2.0, 0.34))
    return scene_from_specs(g, specs)


HOM_SIGMA = 2.0
HOM_TIME = 45.0


def hom_packets(dx: float):
    box = 15 * np.pi
    xi = (HOM_SIGMA, (5.0, 0.0), (5.0 + dx, box / 2))
    eta = (HOM_SIGMA, (0.0, 5.0), (box / 2, 5.0))
    return xi, eta


ROTATOR_LINE = 128
ROTATOR_LAYERS = 32
ROTATOR_D = 0.56
ROTATOR_OMEGA = 0.69
PBS_LINE = 148
PBS_LAYERS = 8
PBS_D = 0.56
PBS_OMEGA = 5.0


def chsh_scene(theta_a: float, theta_b: float) -> Scene:
    g = GridSpec(512, 256, 20 * np.pi, 10 * np.pi)
    x0, cy = 10 * np.pi, 5 * np.pi
    specs = [
        ObjectSpec("rotator", x0 - 9.0, cy, 0.0, ROTATOR_LINE, ROTATOR_LAYERS,
                   ROTATOR_D, ROTATOR_OMEGA, theta_rot=theta_a, theta_pol=0.0),
        ObjectSpec("pbs", x0 - 21.4, cy, 45.0, PBS_LINE, PBS_LAYERS, PBS_D, PBS_OMEGA),
        ObjectSpec("rotator", x0 + 9.0, cy, 0.0, ROTATOR_LINE, ROTATOR_LAYERS,
                   ROTATOR_D, ROTATOR_OMEGA, theta_rot=theta_b, theta_pol=0.0),
        ObjectSpec("pbs", x0 + 21.4, cy, 45.0, PBS_LINE, PBS_LAYERS, PBS_D, PBS_OMEGA),
    ]
    return scene_from_specs(g, specs)


CHSH_TIME = 30.0


def chsh_packets():
    x0, cy = 10 * np.pi, 5 * np.pi
    xi = (SIGMA, (-10.0, 0.0), (x0, cy))
    eta = (SIGMA, (10.0, 0.0), (x0, cy))
    return xi, eta


def pol_scene(theta_rot: float) -> Scene:
    g = GridSpec(512, 256, 20 * np.pi, 10 * np.pi)
    cy = 5 * np.pi
    specs = [
        ObjectSpec("rotator", 10.0, cy, 0.0, ROTATOR_LINE, ROTATOR_LAYERS,
                   ROTATOR_D, ROTATOR_OMEGA, theta_rot=theta_rot, theta_pol=0.0),
        ObjectSpec("pbs", 26.0, cy, 45.0, PBS_LINE, PBS_LAYERS, PBS_D, PBS_OMEGA),
    ]
    return scene_from_specs(g, specs)


POL_START = (2.0, 5 * np.pi)
POL_KBAR = (10.0, 0.0)
POL_TIME = 36.0


def stability_scene() -> Scene:
    box = 10 * np.pi
    g = GridSpec(256, 256, box, box)
    specs = [ObjectSpec("mirror", box / 2, box / 2, 45.0, 198, 8, 0.5, 2.5)]
    return scene_from_specs(g, specs)


STAB_SIGMA = 1.0
STAB_START = (5.0, 5 * np.pi)
STAB_KBAR = (5.0, 0.0)
STAB_TIME = 50.0


# ---------------------------------------------------------------------------
# sweep workers (module-level so they pickle for the process pool)


def _snapshot_writer(snap, tag: str, steps: int):
    """snap = (out_dir, experiment, every, dt) or None; final step always written."""
    if snap is None:
        return None
    out_dir, experiment, every, dt = snap

    def cb(state, step_idx):
        if step_idx % every != 0 and step_idx != steps:
            return
        t = step_idx * dt
        if isinstance(state, ProductState):
            for fid, f in state.factors.items():
                write_qf01(Path(out_dir) / f"{experiment}_{tag}_{fid}_{t:g}.qf", f.field, t)
        else:
            write_qf01(Path(out_dir) / f"{experiment}_{tag}_{t:g}.qf", state.field, t)

    return cb


def _mz_point(args):
    layers, dt, steps, integrator, snap = args
    scene = mz_scene(int(layers))
    s = gaussian_packet(scene.grid, SIGMA, MZ_KBAR, MZ_START, 0.0, n_atoms=scene.n_atoms)
    _evolve_single(s, scene, dt, steps, integrator, _snapshot_writer(snap, f"{layers}", steps))
    p_right = sum(
        region_probability(s, scene.regions[k]) for k in ("right_a", "right_b")
    )
    p_up = sum(region_probability(s, scene.regions[k]) for k in ("up_a", "up_b"))
    return p_right, p_up


def _scatterer_point(args):
    offset, dt, steps, snap = args
    scene = scatterer_scene(*offset) if offset is not None else scatterer_scene(None)
    s = gaussian_packet(scene.grid, SIGMA, SCAT_KBAR, SCAT_START, 0.0, n_atoms=scene.n_atoms)
    tag = "none" if offset is None else f"{offset[0]:g}_{offset[1]:g}"
    _evolve_single(s, scene, dt, steps, "trotter", _snapshot_writer(snap, tag, steps))
    d = number_density(s)
    x, y = scene.grid.position_axes()
    cy = 5 * np.pi
    edge = d[x >= SCAT_EDGE_X0, :].sum(axis=0)
    full = d[(x >= SCAT_FULL_X0) | (x <= SCAT_FULL_WRAP), :].sum(axis=0)
    ay = np.abs(y - cy)
    return edge, full, ay


def _hom_point(args):
    dx, dt, steps, snap = args
    scene = hom_scene(True)
    xi, eta = hom_packets(dx)
    st = hom_initial(scene.grid, xi, eta, n_atoms=scene.n_atoms)
    st, peak = _evolve_product(st, scene, dt, steps, _snapshot_writer(snap, f"{dx:g}", steps))
    t_final = steps * dt
    ref = hom_initial(scene.grid, xi, eta, n_atoms=scene.n_atoms)
    for f in ref.factors.values():
        free_evolve(f, t_final, scene)
    ref.time = t_final
    return coincidence_overlap(st, ref), peak


def _chsh_pair(args):
    c, theta_a, theta_b, dt, steps, snap = args
    scene = chsh_scene(theta_a, theta_b)
    xi, eta = chsh_packets()
    st = bell_initial(c, scene.grid, xi, eta, n_atoms=scene.n_atoms)
    tag = f"{c:g}_{theta_a:g}_{theta_b:g}"
    st, peak = _evolve_product(st, scene, dt, steps, _snapshot_writer(snap, tag, steps))
    probs = joint_polarization_probs(st)
    return probs, peak


def _pol_point(args):
    theta_rot, dt, steps, snap = args
    scene = pol_scene(theta_rot)
    s = gaussian_packet(scene.grid, SIGMA, POL_KBAR, POL_START, 0.0, n_atoms=scene.n_atoms)
    _evolve_single(s, scene, dt, steps, "trotter", _snapshot_writer(snap, f"{theta_rot:g}", steps))
    return float(number_density(s, "V").sum() + atom_occupation(s, "V"))


def _map_points(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(a) for a in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _snap_spec(cfg: ExperimentConfig):
    """Snapshot cadence spec; snapshotting runs serially (one file writer)."""
    if cfg.snapshot_every <= 0:
        return None
    return (str(cfg.out_dir), cfg.experiment, cfg.snapshot_every, cfg.dt)


# ---------------------------------------------------------------------------
# runners


def _steps_for(cfg: ExperimentConfig, default_time: float) -> int:
    if cfg.steps is not None:
        return cfg.steps
    return int(round(default_time / cfg.dt))


def load_calibration(path: str | Path) -> dict[int, float]:
    """layers -> phi table written by the phase-shifter calibration."""
    table = {}
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    try:
        i_l, i_p = header.index("layers"), header.index("phi")
    except ValueError:
        raise ConfigError(f"{path} is not a calibration table (needs layers,phi)") from None
    for line in lines[1:]:
        parts = line.split(",")
        table[int(float(parts[i_l]))] = float(parts[i_p])
    return table


def run_mz(cfg: ExperimentConfig) -> ResultSeries:
    if cfg.calibration is None:
        raise ConfigError("mz needs 'calibration' (run `qodsim calibrate-ps` first)")
    cal = load_calibration(cfg.calibration)
    sweep = cfg.sweep or SweepSpec("ps_layers", 0, 20, 1)
    if sweep.name != "ps_layers":
        raise ConfigError(f"mz sweeps 'ps_layers', got {sweep.name!r}")
    steps = _steps_for(cfg, MZ_TIME)
    layer_values = [int(v) for v in sweep.values()]
    missing = [n for n in layer_values if n not in cal]
    if missing:
        raise ConfigError(f"calibration table lacks layer counts {missing}")
    snap = _snap_spec(cfg)
    results = _map_points(
        _mz_point,
        [(n, cfg.dt, steps, cfg.integrator, snap) for n in layer_values],
        _effective_threads(cfg),
    )
    rs = ResultSeries(["layers", "phi", "p_right", "p_up"])
    for n, (p_right, p_up) in zip(layer_values, results):
        rs.add_row(n, cal[n], p_right, p_up)
    return rs


def run_scatterer(cfg: ExperimentConfig) -> ResultSeries:
    sweep = cfg.sweep or SweepSpec("width", 0.25, 15.7, 0.0625)
    if sweep.name != "width":
        raise ConfigError(f"scatterer sweeps 'width', got {sweep.name!r}")
    offsets = cfg.offsets if cfg.offsets is not None else SCAT_OFFSETS
    steps = _steps_for(cfg, SCAT_TIME)
    widths = sweep.values()
    snap = _snap_spec(cfg)
    results = _map_points(
        _scatterer_point, [(off, cfg.dt, steps, snap) for off in offsets],
        _effective_threads(cfg),
    )
    rs = ResultSeries(["dx", "dy", "width", "error_edge", "error_full"])
    for off, (edge, full, ay) in zip(offsets, results):
        dx, dy = off if off is not None else (float("nan"), float("nan"))
        for w in widths:
            sel = ay <= w
            rs.add_row(dx, dy, float(w), 1.0 - float(edge[sel].sum()), 1.0 - float(full[sel].sum()))
    return rs


def run_hom(cfg: ExperimentConfig) -> ResultSeries:
    sweep = cfg.sweep or SweepSpec("dx", 0.0, 10.0, 0.5)
    if sweep.name != "dx":
        raise ConfigError(f"hom sweeps 'dx', got {sweep.name!r}")
    steps = _steps_for(cfg, HOM_TIME)
    values = sweep.values()
    snap = _snap_spec(cfg)
    results = _map_points(
        _hom_point, [(dx, cfg.dt, steps, snap) for dx in values], _effective_threads(cfg)
    )
    rs = ResultSeries(["dx", "p", "p_analytic", "peak_site_bunching"])
    for dx, (p, peak) in zip(values, results):
        analytic = 0.5 * (1.0 - np.exp(-(dx**2) / (2.0 * HOM_SIGMA**2)))
        rs.add_row(float(dx), p, float(analytic), peak)
    return rs


def chsh_angle_pairs(theta: float) -> list[tuple[float, float]]:
    """Analyzer settings (a,b), (a'b), (a'b'), (a,b') with the standard ladder."""
    return [(0.0, theta), (2 * theta, theta), (2 * theta, 3 * theta), (0.0, 3 * theta)]


def run_chsh(cfg: ExperimentConfig) -> ResultSeries:
    sweep = cfg.sweep or SweepSpec("theta", 0.0, np.pi / 2, np.pi / 32)
    if sweep.name not in ("theta", "c"):
        raise ConfigError(f"chsh sweeps 'theta' or 'c', got {sweep.name!r}")
    steps = _steps_for(cfg, CHSH_TIME)
    points = []
    for v in sweep.values():
        theta = float(v) if sweep.name == "theta" else cfg.theta
        c = cfg.c if sweep.name == "theta" else float(v)
        points.append((theta, c))
    snap = _snap_spec(cfg)
    tasks = []
    for theta, c in points:
        for ta, tb in chsh_angle_pairs(theta):
            tasks.append((c, ta, tb, cfg.dt, steps, snap))
    results = _map_points(_chsh_pair, tasks, _effective_threads(cfg))
    rs = ResultSeries(
        ["theta", "c", "S", "E_ab", "E_a2b", "E_a2b2", "E_ab2", "closure_min", "peak_site_bunching"]
    )
    for i, (theta, c) in enumerate(points):
        probs = [results[4 * i + j][0] for j in range(4)]
        peaks = max(results[4 * i + j][1] for j in range(4))
        es = [
            p[("H", "H")] + p[("V", "V")] - p[("H", "V")] - p[("V", "H")] for p in probs
        ]
        s_val = es[0] + es[1] + es[2] - es[3]
        closure = min(sum(p.values()) for p in probs)
        rs.add_row(theta, c, s_val, es[0], es[1], es[2], es[3], closure, peaks)
    return rs


def run_pol(cfg: ExperimentConfig) -> ResultSeries:
    sweep = cfg.sweep or SweepSpec("theta_rot", 0.0, np.pi / 2, np.pi / 32)
    if sweep.name != "theta_rot":
        raise ConfigError(f"pol sweeps 'theta_rot', got {sweep.name!r}")
    steps = _steps_for(cfg, POL_TIME)
    values = sweep.values()
    snap = _snap_spec(cfg)
    results = _map_points(
        _pol_point, [(th, cfg.dt, steps, snap) for th in values], _effective_threads(cfg)
    )
    rs = ResultSeries(["theta_rot", "p_v", "sin2"])
    for th, p_v in zip(values, results):
        rs.add_row(float(th), p_v, float(np.sin(th) ** 2))
    return rs


def run_stability(cfg: ExperimentConfig) -> ResultSeries:
    from .scene import parse_scene

    if cfg.scene is not None:
        scene = parse_scene(Path(cfg.scene).read_text())
        start = (scene.grid.lx / 6.0, scene.grid.ly / 2.0)
    else:
        scene = stability_scene()
        start = STAB_START
    steps = _steps_for(cfg, STAB_TIME)
    rs = ResultSeries(["integrator", "t", "norm", "energy"])
    for integrator in ("trotter", "rk4"):
        s = gaussian_packet(
            scene.grid, STAB_SIGMA, STAB_KBAR, start, 0.0, n_atoms=scene.n_atoms
        )
        stepper = (TrotterStepper if integrator == "trotter" else Rk4Stepper)(scene, cfg.dt)
        cb = _snapshot_writer(_snap_spec(cfg), integrator, steps)
        e = energy(s, scene)
        rs.add_row(integrator, 0.0, s.norm_sq(), e.total)
        for i in range(1, steps + 1):
            stepper.step(s)
            _check_finite(s, i)
            e = energy(s, scene)
            rs.add_row(integrator, i * cfg.dt, s.norm_sq(), e.total)
            if cb:
                cb(s, i)
    return rs


RUNNERS = {
    "mz": run_mz,
    "scatterer": run_scatterer,
    "hom": run_hom,
    "chsh": run_chsh,
    "pol": run_pol,
    "stability": run_stability,
}


def reference_scene_text(cfg: ExperimentConfig) -> str:
    """DSL text of the bench at a representative sweep setting (for manifests)."""
    builders = {
        "mz": lambda: mz_scene(0),
        "scatterer": lambda: scatterer_scene(11.0, 0.0),
        "hom": lambda: hom_scene(True),
        "chsh": lambda: chsh_scene(0.0, np.pi / 8),
        "pol": lambda: pol_scene(np.pi / 4),
        "stability": stability_scene,
    }
    if cfg.experiment == "stability" and cfg.scene is not None:
        return Path(cfg.scene).read_text()
    return serialize_scene(builders[cfg.experiment]())


def run_experiment(cfg: ExperimentConfig) -> tuple[ResultSeries, dict]:
    """Execute the configured experiment; returns (results, manifest info)."""
    t0 = _time.perf_counter()
    rs = RUNNERS[cfg.experiment](cfg)
    wall = _time.perf_counter() - t0
    scene_text = reference_scene_text(cfg)
    info = {
        "experiment": cfg.experiment,
        "wall_clock_s": wall,
        "scene_sha256": hashlib.sha256(scene_text.encode()).hexdigest(),
        "scene_text": scene_text,
    }
    rs.metadata.update(
        {"experiment": cfg.experiment, "dt": cfg.dt, "integrator": cfg.integrator,
         "scene_sha256": info["scene_sha256"], "wall_clock_s": wall}
    )
    return rs, info
