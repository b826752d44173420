import numpy as np
import pytest

from qodfigures.qf01 import FieldSnapshot, write_qf01


@pytest.fixture
def golden_dir(tmp_path):
    """Synthetic result tables and snapshots shaped like real run output."""
    rng = np.random.default_rng(0)

    phi = np.linspace(0, np.pi, 21)
    lines = ["layers,phi,p_right,p_up"]
    for n, p in enumerate(phi):
        pr = float(np.cos(p / 2) ** 2) * 0.98
        lines.append(f"{n},{float(p)!r},{pr!r},{1 - pr!r}")
    (tmp_path / "mz_results.csv").write_text("\n".join(lines) + "\n")

    widths = np.arange(0.5, 15.5, 0.5)
    lines = ["dx,dy,width,error_edge,error_full"]
    for dx, dy in ((float("nan"), float("nan")), (7.4, 0.0), (11.0, 0.0)):
        for w in widths:
            e = float(np.exp(-w / 4)) * (1.0 if np.isnan(dx) else 0.8)
            lines.append(f"{dx!r},{dy!r},{float(w)!r},{e!r},{e / 2!r}")
    (tmp_path / "scatterer_results.csv").write_text("\n".join(lines) + "\n")

    dxs = np.arange(0, 10.5, 0.5)
    lines = ["dx,p,p_analytic,peak_site_bunching"]
    for d in dxs:
        ana = 0.5 * (1 - np.exp(-(d**2) / 8))
        lines.append(f"{float(d)!r},{float(ana + 0.002)!r},{float(ana)!r},0.0001")
    (tmp_path / "hom_results.csv").write_text("\n".join(lines) + "\n")

    thetas = np.linspace(0, np.pi / 2, 17)
    lines = ["theta,c,S,E_ab,E_a2b,E_a2b2,E_ab2,closure_min,peak_site_bunching"]
    for th in thetas:
        s = 3 * np.cos(2 * th) - np.cos(6 * th)
        lines.append(f"{float(th)!r},1.0,{float(s)!r},0.7,0.7,0.7,-0.7,0.9999,0.0001")
    (tmp_path / "chsh_results.csv").write_text("\n".join(lines) + "\n")

    lines = ["theta_rot,p_v,sin2"]
    for th in thetas:
        lines.append(f"{float(th)!r},{float(np.sin(th) ** 2) * 0.995!r},{float(np.sin(th) ** 2)!r}")
    (tmp_path / "pol_results.csv").write_text("\n".join(lines) + "\n")

    lines = ["integrator,t,norm,energy"]
    for t in np.arange(0, 50.1, 0.5):
        lines.append(f"trotter,{float(t)!r},1.0,{5.05!r}")
        lines.append(f"rk4,{float(t)!r},{float(1.0 + 0.0007 * t)!r},{float(5.05 + 0.001 * t)!r}")
    (tmp_path / "stability_results.csv").write_text("\n".join(lines) + "\n")

    mx, my = 32, 16
    for name, t in (("mz_0_10.qf", 10.0), ("mz_0_20.qf", 20.0)):
        h = rng.standard_normal((mx, my)) + 1j * rng.standard_normal((mx, my))
        v = np.zeros((mx, my), complex)
        write_qf01(tmp_path / name, FieldSnapshot(mx, my, 8.0, 4.0, t, h, v))

    (tmp_path / "bench.scene").write_text(
        "grid 32 16 box 8.0 4.0\n"
        "mirror at 4.0 2.0 tilt 45 line 8 layers 2 D 0.5 omega 2.5\n"
        "phaseshifter at 6.0 2.0 tilt 0 line 6 layers 3 D 0.56 omega 1.0\n"
    )
    return tmp_path
