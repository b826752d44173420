"""Figure recipes: result tables and snapshots to publication-style panels.

A recipe names one of the six figure layouts, the input files (CSV tables
and optional .qf snapshots, globs allowed) and the output image.  Curve
panels overlay the closed-form reference where one exists; density
heatmaps are normalized per frame to their own maximum, with a margin
note recording that choice.
"""

from __future__ import annotations

import csv
import glob as globmod
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .qf01 import read_qf01

FIGURE_IDS = ("mz", "scatterer", "hom", "chsh", "pol", "stability")


class RecipeError(ValueError):
    pass


@dataclass
class FigureRecipe:
    figure: str
    inputs: list[str]
    output: str
    style: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, path: str | Path) -> "FigureRecipe":
        raw = json.loads(Path(path).read_text())
        missing = {"figure", "inputs", "output"} - set(raw)
        if missing:
            raise RecipeError(f"recipe is missing keys {sorted(missing)}")
        rec = cls(raw["figure"], list(raw["inputs"]), raw["output"], raw.get("style", {}))
        if rec.figure not in FIGURE_IDS:
            raise RecipeError(f"unknown figure id {rec.figure!r} (choose from {FIGURE_IDS})")
        return rec

    def resolve_inputs(self, base: Path) -> tuple[list[Path], list[Path]]:
        """Expand globs relative to the recipe location; split CSVs from snapshots."""
        csvs, snaps = [], []
        for pattern in self.inputs:
            pat = pattern if Path(pattern).is_absolute() else str(base / pattern)
            matches = sorted(globmod.glob(pat))
            if not matches:
                raise RecipeError(f"recipe input {pattern!r} matched no files")
            for m in matches:
                (snaps if m.endswith(".qf") else csvs).append(Path(m))
        return csvs, snaps


def read_table(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise RecipeError(f"{path}: empty table")
    out = {}
    for name in rows[0]:
        col = [r[name] for r in rows]
        try:
            out[name] = np.array([float(v) for v in col])
        except ValueError:
            out[name] = np.array(col)
    return out


def _require(table: dict, cols: tuple[str, ...], path: Path) -> None:
    missing = [c for c in cols if c not in table]
    if missing:
        raise RecipeError(f"{path}: table lacks columns {missing}")


# --- scene outlines -------------------------------------------------------

OBJECT_KINDS = ("mirror", "beamsplitter", "phaseshifter", "scatterer", "pbs", "rotator")


def scene_outlines(path: str | Path) -> list[tuple[str, float, float, float, float]]:
    """(kind, x0, y0, x1, y1) bounding boxes of the objects in a scene file."""
    boxes = []
    grid = None
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "grid":
            grid = (int(parts[1]), int(parts[2]), float(parts[4]), float(parts[5]))
            continue
        if parts[0] not in OBJECT_KINDS or grid is None:
            continue
        kv = dict(zip(parts[4::2], parts[5::2]))
        x, y = float(parts[2]), float(parts[3])
        tilt = float(kv.get("tilt", 0.0))
        n_line = int(kv["line"])
        layers = int(kv["layers"])
        if layers < 1:
            continue
        dx = grid[2] / grid[0]
        dy = grid[3] / grid[1]
        if tilt == 45.0:
            half = (n_line - 1) / 2 * dx + (layers - 1) / 2 * dx
            boxes.append((parts[0], x - half, y - half, x + half, y + half))
        elif tilt == 90.0:
            boxes.append(
                (parts[0], x - (n_line - 1) / 2 * dx, y - (layers - 1) / 2 * dy,
                 x + (n_line - 1) / 2 * dx, y + (layers - 1) / 2 * dy)
            )
        else:
            boxes.append(
                (parts[0], x - (layers - 1) / 2 * dx, y - (n_line - 1) / 2 * dy,
                 x + (layers - 1) / 2 * dx, y + (n_line - 1) / 2 * dy)
            )
    return boxes


# --- building blocks ------------------------------------------------------


def _heatmap(ax, snap, style):
    dens = snap.density()
    peak = dens.max() or 1.0
    ax.imshow(
        dens.T / peak,
        origin="lower",
        extent=(0, snap.lx, 0, snap.ly),
        cmap=style.get("colormap", "inferno"),
        aspect="equal",
    )
    ax.set_title(f"t = {snap.time:g}", fontsize=8)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if style.get("scene"):
        for kind, x0, y0, x1, y1 in scene_outlines(style["scene"]):
            ax.add_patch(
                plt.Rectangle(
                    (x0, y0), x1 - x0, y1 - y0,
                    fill=False, edgecolor="w", linewidth=0.8,
                    linestyle="-" if kind in ("mirror", "pbs") else "--",
                )
            )


def _snapshot_row(fig, snaps, style, bottom=0.06, height=0.22):
    n = len(snaps)
    for i, snap in enumerate(snaps):
        ax = fig.add_axes([0.08 + i * (0.88 / n), bottom, 0.82 / n, height])
        _heatmap(ax, snap, style)
        ax.tick_params(labelsize=6)


def _annotate(fig, style):
    if style.get("annotate", True):
        fig.text(
            0.99, 0.01,
            "heatmaps normalized to per-frame maximum",
            ha="right", va="bottom", fontsize=6, color="0.4",
        )


# --- the six layouts ------------------------------------------------------


def _fig_mz(csvs, snaps, style):
    table = read_table(csvs[0])
    _require(table, ("phi", "p_right"), csvs[0])
    fig = plt.figure(figsize=(6, 6 if snaps else 4))
    ax = fig.add_axes([0.12, 0.42 if snaps else 0.14, 0.84, 0.52 if snaps else 0.8])
    phi = np.linspace(min(table["phi"]), max(table["phi"]), 200)
    ax.plot(phi, np.cos(phi / 2) ** 2, "k--", lw=1, label=r"$\cos^2(\varphi/2)$")
    ax.plot(table["phi"], table["p_right"], "o", ms=4, label="split step")
    ax.axhline(1.0, color="0.7", ls=":", lw=0.8)
    ax.set_xlabel(r"$\varphi$")
    ax.set_ylabel(r"$P_\mathrm{right}$")
    ax.legend(fontsize=8)
    if snaps:
        _snapshot_row(fig, snaps, style)
    return fig


def _fig_scatterer(csvs, snaps, style):
    table = read_table(csvs[0])
    _require(table, ("dx", "dy", "width"), csvs[0])
    col = style.get("column", "error_edge")
    _require(table, (col,), csvs[0])
    fig = plt.figure(figsize=(6, 7 if snaps else 4))
    ax = fig.add_axes([0.12, 0.4 if snaps else 0.14, 0.84, 0.54 if snaps else 0.8])
    keys = sorted({(dx, dy) for dx, dy in zip(table["dx"], table["dy"])},
                  key=lambda t: (math.isnan(t[0]), t))
    for dx, dy in keys:
        if math.isnan(dx):
            sel = np.isnan(table["dx"])
            label = "no scatterer"
            kwargs = {"color": "0.5", "ls": ":"}
        else:
            sel = (table["dx"] == dx) & (table["dy"] == dy)
            label = rf"$\Delta x={dx:g},\ \Delta y={dy:g}$"
            kwargs = {}
        order = np.argsort(table["width"][sel])
        ax.plot(table["width"][sel][order], table[col][sel][order], lw=1.2, label=label, **kwargs)
    ax.set_xlabel("detector half-width")
    ax.set_ylabel("error rate")
    ax.set_yscale(style.get("yscale", "linear"))
    ax.legend(fontsize=7)
    if snaps:
        _snapshot_row(fig, snaps, style)
    return fig


def _fig_hom(csvs, snaps, style):
    table = read_table(csvs[0])
    _require(table, ("dx", "p"), csvs[0])
    fig = plt.figure(figsize=(6, 6 if snaps else 4))
    ax = fig.add_axes([0.12, 0.42 if snaps else 0.14, 0.84, 0.52 if snaps else 0.8])
    dense = np.linspace(0, max(table["dx"]), 300)
    sigma = float(style.get("sigma", 2.0))
    ax.plot(dense, 0.5 * (1 - np.exp(-(dense**2) / (2 * sigma**2))), "k-", lw=1,
            label=r"$\frac{1}{2}(1 - e^{-\Delta x^2/2\sigma^2})$")
    ax.plot(table["dx"], table["p"], "o", ms=4, label="simulation")
    ax.set_xlabel(r"$\Delta x$")
    ax.set_ylabel("coincidence probability")
    ax.legend(fontsize=8)
    if snaps:
        _snapshot_row(fig, snaps, style)
    return fig


def _fig_chsh(csvs, snaps, style):
    table = read_table(csvs[0])
    _require(table, ("theta", "c", "S"), csvs[0])
    fig = plt.figure(figsize=(6, 6 if snaps else 4))
    ax = fig.add_axes([0.12, 0.42 if snaps else 0.14, 0.84, 0.52 if snaps else 0.8])
    dense = np.linspace(min(table["theta"]), max(table["theta"]), 300)
    ax.plot(dense, 3 * np.cos(2 * dense) - np.cos(6 * dense), "-", color="C0", lw=1,
            label=r"$3\cos 2\theta - \cos 6\theta$")
    for c in sorted(set(table["c"])):
        sel = table["c"] == c
        ax.plot(table["theta"][sel], table["S"][sel], "o", ms=4, label=f"c = {c:g}")
    for lim in (2.0, -2.0):
        ax.axhline(lim, color="0.5", ls="--", lw=0.9)
    ax.text(0.02, 2.05, "local realism bound", fontsize=7, color="0.4")
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel(r"$S(\theta)$")
    ax.legend(fontsize=8)
    if snaps:
        _snapshot_row(fig, snaps, style)
    return fig


def _fig_pol(csvs, snaps, style):
    table = read_table(csvs[0])
    _require(table, ("theta_rot", "p_v"), csvs[0])
    fig = plt.figure(figsize=(6, 6 if snaps else 4))
    ax = fig.add_axes([0.12, 0.42 if snaps else 0.14, 0.84, 0.52 if snaps else 0.8])
    dense = np.linspace(0, max(table["theta_rot"]), 200)
    ax.plot(dense, np.sin(dense) ** 2, "k-", lw=1, label=r"$\sin^2\theta_\mathrm{rot}$")
    ax.plot(table["theta_rot"], table["p_v"], "o", ms=4, label="simulation")
    ax.set_xlabel(r"$\theta_\mathrm{rot}$")
    ax.set_ylabel(r"$P_V$")
    ax.legend(fontsize=8)
    if snaps:
        _snapshot_row(fig, snaps, style)
    return fig


def _fig_stability(csvs, snaps, style):
    table = read_table(csvs[0])
    _require(table, ("integrator", "t", "norm", "energy"), csvs[0])
    fig, (ax_n, ax_e) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    for integ, color in (("trotter", "C0"), ("rk4", "C1")):
        sel = table["integrator"] == integ
        if not sel.any():
            continue
        ax_n.plot(table["t"][sel], table["norm"][sel], color=color, lw=1.2, label=integ)
        ax_e.plot(table["t"][sel], table["energy"][sel], color=color, lw=1.2, label=integ)
    ax_n.axhline(1.0, color="0.6", ls=":", lw=0.8)
    ax_n.set_ylabel("state norm")
    ax_e.set_ylabel("total energy")
    ax_e.set_xlabel("t")
    ax_n.legend(fontsize=8)
    fig.tight_layout()
    return fig


_RENDERERS = {
    "mz": _fig_mz,
    "scatterer": _fig_scatterer,
    "hom": _fig_hom,
    "chsh": _fig_chsh,
    "pol": _fig_pol,
    "stability": _fig_stability,
}


def render(recipe: FigureRecipe, base: Path | None = None) -> Path:
    """Render one recipe to its raster output path; inputs are read-only."""
    base = base or Path.cwd()
    csvs, snaps = recipe.resolve_inputs(base)
    if recipe.figure != "stability" and not csvs and not snaps:
        raise RecipeError("recipe has no usable inputs")
    if not csvs:
        raise RecipeError(f"figure {recipe.figure!r} needs a results CSV input")
    snapshots = [read_qf01(p) for p in snaps[:4]]
    fig = _RENDERERS[recipe.figure](csvs, snapshots, recipe.style)
    _annotate(fig, recipe.style)
    out = Path(recipe.output)
    if not out.is_absolute():
        out = base / out
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=int(recipe.style.get("dpi", 150)))
    plt.close(fig)
    return out
