import json

import pytest

from qodsim.cli import main

SMALL_SCENE_TEXT = """grid 64 64 box 7.853981633974483 7.853981633974483
mirror at 3.9269908169872414 3.9269908169872414 tilt 45 line 20 layers 4 D 0.5 omega 2.5
"""


def test_version(capsys):
    assert main(["version"]) == 0
    assert "qodsim" in capsys.readouterr().out


def test_run_missing_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.json")]) == 1
    assert "nope.json" in capsys.readouterr().err


def test_run_rejects_bad_dt(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"experiment": "stability", "dt": -1.0}))
    assert main(["run", str(cfg)]) == 1
    assert "dt" in capsys.readouterr().err


def test_run_missing_scene_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "stability", "scene": str(tmp_path / "gone.scene")}))
    assert main(["run", str(cfg)]) == 1
    assert "gone.scene" in capsys.readouterr().err


def test_run_stability_end_to_end(tmp_path):
    scene = tmp_path / "mini.scene"
    scene.write_text(SMALL_SCENE_TEXT)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "experiment": "stability",
                "scene": str(scene),
                "steps": 5,
                "out_dir": str(tmp_path / "out"),
            }
        )
    )
    assert main(["run", str(cfg)]) == 0
    csv_path = tmp_path / "out" / "stability_results.csv"
    assert csv_path.exists()
    assert csv_path.read_text().splitlines()[0] == "integrator,t,norm,energy"
    manifest = (tmp_path / "out" / "stability_manifest.txt").read_text()
    assert "--- config (verbatim) ---" in manifest
    assert SMALL_SCENE_TEXT.splitlines()[1] in manifest
    assert "scene_sha256" in manifest


def test_run_config_flag_and_overrides(tmp_path):
    scene = tmp_path / "mini.scene"
    scene.write_text(SMALL_SCENE_TEXT)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "stability", "scene": str(scene), "steps": 3}))
    out = tmp_path / "alt"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--dt", "0.2"]) == 0
    rows = (out / "stability_results.csv").read_text().splitlines()[1:]
    times = {row.split(",")[1] for row in rows}
    assert "0.6000000000000001" in times  # 3 steps at the overridden dt


def test_scene_check_ok(tmp_path, capsys):
    f = tmp_path / "s.scene"
    f.write_text(SMALL_SCENE_TEXT)
    assert main(["scene-check", str(f)]) == 0
    assert "80 atoms" in capsys.readouterr().out


def test_scene_check_reports_line(tmp_path, capsys):
    f = tmp_path / "s.scene"
    f.write_text("grid 64 64 box 8.0 8.0\nprism at 1 1\n")
    assert main(["scene-check", str(f)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_oracle_check_converges(capsys):
    assert main(["oracle-check", "--grid", "8", "--atoms", "2"]) == 0
    out = capsys.readouterr().out
    assert "empirical order" in out


def test_oracle_check_zero_atoms_roundoff(capsys):
    # free propagation is exact: errors at roundoff for every dt
    assert main(["oracle-check", "--grid", "8", "--atoms", "0", "--dt", "0.1,0.05"]) == 0
    out = capsys.readouterr().out
    errs = [float(line.split("=")[-1]) for line in out.splitlines() if "l2_error" in line]
    assert all(e < 1e-12 for e in errs)


def test_oracle_check_single_dt(capsys):
    assert main(["oracle-check", "--grid", "8", "--atoms", "1", "--dt", "0.1"]) == 0
    assert "n/a" in capsys.readouterr().out


def test_oracle_check_grid_cap(capsys):
    assert main(["oracle-check", "--grid", "32"]) == 1


def test_calibrate_ps_short(tmp_path, capsys):
    assert main(["calibrate-ps", "--layers-max", "1", "--out", str(tmp_path)]) == 0
    table = (tmp_path / "ps_calibration.csv").read_text().splitlines()
    assert table[0] == "layers,phi,transmission"
    assert len(table) == 3
    phi1 = float(table[2].split(",")[1])
    assert 0.05 < phi1 < 0.4  # one layer adds a small positive phase


def test_threads_env_fallback(monkeypatch):
    from qodsim.cli import _threads_default

    monkeypatch.setenv("QOD_THREADS", "7")
    assert _threads_default() == 7
    monkeypatch.setenv("QOD_THREADS", "junk")
    assert _threads_default() == 1
    monkeypatch.delenv("QOD_THREADS")
    assert _threads_default() == 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_run_nan_exits_2(tmp_path, capsys):
    # RK4 far beyond its stability limit overflows to non-finite amplitudes
    scene = tmp_path / "mini.scene"
    scene.write_text(SMALL_SCENE_TEXT)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "experiment": "stability",
                "scene": str(scene),
                "steps": 400,
                "dt": 5.0,
                "out_dir": str(tmp_path / "out"),
            }
        )
    )
    assert main(["run", str(cfg)]) == 2
    assert "numerical error" in capsys.readouterr().err
