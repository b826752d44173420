"""Command line entry point.

    qodsim run [CONFIG] [--config PATH] [--out DIR] [--dt V]
               [--integrator trotter|rk4] [--threads N] [--snapshot-every K]
    qodsim scene-check FILE
    qodsim calibrate-ps [--layers-max N] [--dt V] [--out DIR]
    qodsim oracle-check [--grid N] [--atoms N] [--dt LIST]
    qodsim version

Exit codes: 0 success, 1 configuration error, 2 numerical error (NaN in
the state), 3 I/O failure.  QOD_THREADS is the fallback for --threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibrate import CalibrationError, calibrate_phase_shifter
from .evolution import TrotterStepper, dense_oracle_evolve
from .experiments import (
    ConfigError,
    ExperimentConfig,
    NumericalError,
    run_experiment,
)
from .field import GridSpec, gaussian_packet
from .scene import Atom, Scene, SceneError, parse_scene

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _threads_default() -> int:
    env = os.environ.get("QOD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def cmd_run(args) -> int:
    config_path = args.config or args.config_pos
    if config_path is None:
        print("run: missing config path (positional or --config)", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.integrator is not None:
        overrides["integrator"] = args.integrator
    if args.snapshot_every is not None:
        overrides["snapshot_every"] = args.snapshot_every
    overrides["threads"] = args.threads
    try:
        cfg = ExperimentConfig.from_json(config_path, **overrides)
        if cfg.scene is not None and not Path(cfg.scene).exists():
            raise ConfigError(f"scene file not found: {cfg.scene}")
        if cfg.calibration is not None and not Path(cfg.calibration).exists():
            raise ConfigError(f"calibration file not found: {cfg.calibration}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        results, info = run_experiment(cfg)
        csv_path = cfg.out_dir / f"{cfg.experiment}_results.csv"
        results.write_csv(csv_path)
        manifest = cfg.out_dir / f"{cfg.experiment}_manifest.txt"
        manifest.write_text(_manifest_text(config_path, cfg, info))
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SceneError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {csv_path}")
    return EXIT_OK


def _manifest_text(config_path, cfg: ExperimentConfig, info: dict) -> str:
    config_echo = Path(config_path).read_text()
    lines = [
        f"qodsim {__version__}",
        f"experiment: {cfg.experiment}",
        f"wall_clock_s: {info['wall_clock_s']!r}",
        f"scene_sha256: {info['scene_sha256']}",
        f"dt: {cfg.dt!r}",
        f"integrator: {cfg.integrator}",
        f"threads: {cfg.threads}",
        "",
        "--- config (verbatim) ---",
        config_echo.rstrip("\n"),
        "",
        "--- scene (DSL) ---",
        info["scene_text"].rstrip("\n"),
        "",
    ]
    return "\n".join(lines)


def cmd_scene_check(args) -> int:
    try:
        text = Path(args.file).read_text()
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        scene = parse_scene(text)
    except SceneError as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    g = scene.grid
    print(
        f"ok: grid {g.mx}x{g.my} box {g.lx:g}x{g.ly:g}, "
        f"{scene.n_atoms} atoms in {len(scene.objects)} objects, "
        f"{len(scene.regions)} regions"
    )
    return EXIT_OK


def cmd_calibrate_ps(args) -> int:
    try:
        rs = calibrate_phase_shifter(range(0, args.layers_max + 1), dt=args.dt)
    except CalibrationError as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "ps_calibration.csv"
        rs.write_csv(path)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    for n, phi, t in rs.rows:
        print(f"layers={n:2d}  phi={phi:+.6f}  transmission={t:.4f}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    n = args.grid
    if n > 16:
        print("oracle-check: grid must be <= 16", file=sys.stderr)
        return EXIT_CONFIG
    try:
        dts = [float(tok) for tok in args.dt.split(",") if tok]
    except ValueError:
        print(f"oracle-check: bad dt list {args.dt!r}", file=sys.stderr)
        return EXIT_CONFIG
    box = 2 * np.pi
    grid = GridSpec(n, n, box, box)
    rng = np.random.default_rng(12345)
    atoms = []
    taken = set()
    while len(atoms) < args.atoms:
        ij = (int(rng.integers(0, n)), int(rng.integers(0, n)))
        if ij in taken:
            continue
        taken.add(ij)
        atoms.append(Atom(ij[0], ij[1], float(rng.uniform(1.0, 2.5)),
                          float(rng.uniform(0.3, 0.8)), float(rng.uniform(0.3, 0.8))))
    scene = Scene(grid, tuple(atoms))
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s0 = gaussian_packet(grid, 0.3 * box, (2.0, 1.0), (box / 2, box / 2), 0.4,
                             n_atoms=scene.n_atoms)
    t_final = 1.0
    exact = dense_oracle_evolve(scene, s0, t_final)
    errs = []
    for dt in dts:
        s = s0.copy()
        stepper = TrotterStepper(scene, dt)
        for _ in range(round(t_final / dt)):
            stepper.step(s)
        err = np.sqrt(
            np.sum(np.abs(s.field.h - exact.field.h) ** 2)
            + np.sum(np.abs(s.field.v - exact.field.v) ** 2)
            + np.sum(np.abs(s.atom_amps - exact.atom_amps) ** 2)
        )
        errs.append(err)
        print(f"dt={dt:g}  l2_error={err:.6e}")
    if len(errs) < 2:
        print("order: n/a (need at least two dt values)")
        return EXIT_OK
    if max(errs) < 1e-12:
        print("order: n/a (errors at roundoff; the splitting is exact here)")
        return EXIT_OK
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    steps_ratio = [dts[i] / dts[i + 1] for i in range(len(dts) - 1)]
    orders = [np.log(r) / np.log(sr) for r, sr in zip(ratios, steps_ratio)]
    order = float(np.mean(orders))
    print(f"ratios: {[round(r, 3) for r in ratios]}")
    print(f"empirical order: {order:.3f}")
    if 1.8 <= order <= 2.2:
        return EXIT_OK
    print("order outside [1.8, 2.2]", file=sys.stderr)
    return EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qodsim", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config_pos", nargs="?", default=None, metavar="CONFIG")
    p_run.add_argument("--config", default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--dt", type=float, default=None)
    p_run.add_argument("--integrator", choices=("trotter", "rk4"), default=None)
    p_run.add_argument("--threads", type=int, default=_threads_default())
    p_run.add_argument("--snapshot-every", type=int, default=None, dest="snapshot_every")
    p_run.set_defaults(func=cmd_run)

    p_chk = sub.add_parser("scene-check", help="parse and validate a scene DSL file")
    p_chk.add_argument("file")
    p_chk.set_defaults(func=cmd_scene_check)

    p_cal = sub.add_parser("calibrate-ps", help="calibrate the phase shifter")
    p_cal.add_argument("--layers-max", type=int, default=20)
    p_cal.add_argument("--dt", type=float, default=0.1)
    p_cal.add_argument("--out", default="out")
    p_cal.set_defaults(func=cmd_calibrate_ps)

    p_orc = sub.add_parser("oracle-check", help="split-step vs dense oracle convergence")
    p_orc.add_argument("--grid", type=int, default=8)
    p_orc.add_argument("--atoms", type=int, default=2)
    p_orc.add_argument("--dt", default="0.1,0.05,0.025")
    p_orc.set_defaults(func=cmd_oracle_check)

    p_ver = sub.add_parser("version", help="print the package version")
    p_ver.set_defaults(func=lambda a: (print(f"qodsim {__version__}"), EXIT_OK)[1])

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
