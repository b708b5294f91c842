import json
import math
import subprocess
import time

import numpy as np
import pytest

from fbp import cli


def write(path, text):
    path.write_text(text)
    return path


@pytest.fixture(scope="module")
def wave_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("wave")
    cfg = write(base / "wave.cfg", "scenario = wave  # closed-form fixture\nM = 128\nsnapshot_times = 0.1, 0.25\n")
    assert cli.main(["solve", "--config", str(cfg), "--out", str(base / "out")]) == 0
    return base


def test_solve_outputs(wave_run):
    out = wave_run / "out"
    header = (out / "boundary.csv").read_text().splitlines()[0]
    assert header == "t,L,q,K_residual"
    data = np.loadtxt(out / "boundary.csv", delimiter=",", skiprows=1)
    slope = np.polyfit(data[:, 0], data[:, 1], 1)[0]
    assert slope == pytest.approx(math.sqrt(2), abs=1e-6)
    for label in ("0.1", "0.25"):
        assert (out / "snapshots" / f"rho_{label}.csv").read_text().startswith("x,rho,v\n")
    report = json.loads((out / "report.json").read_text())
    assert set(report["config"]) == set(cli.SOLVE_KEYS)
    assert [d["t"] for d in report["diagnostics"]] == [0.1, 0.25]
    for d in report["diagnostics"]:
        assert {"mass", "v_mass", "boundary_slope", "stefan_residual"} <= set(d)
    assert all(v >= 0 for v in report["timings"].values())
    assert report["oracle"]["sup_abs_L_minus_wave"] < 1e-6


def test_numbers_have_full_precision(wave_run):
    row = (wave_run / "out" / "boundary.csv").read_text().splitlines()[2].split(",")
    assert float(row[1]) == float("%.17g" % float(row[1]))
    assert len(row[1].replace(".", "").lstrip("0")) >= 15


def test_rerun_from_echo_is_identical(wave_run):
    out = wave_run / "out"
    assert cli.main(["solve", "--config", str(out / "config.echo"), "--out", str(wave_run / "again")]) == 0
    assert cli.main(["solve", "--config", str(out / "report.json"), "--out", str(wave_run / "json")]) == 0
    ref = (out / "boundary.csv").read_bytes()
    assert (wave_run / "again" / "boundary.csv").read_bytes() == ref
    assert (wave_run / "json" / "boundary.csv").read_bytes() == ref


def test_config_errors(tmp_path, capsys):
    assert cli.main(["solve", "--config", str(write(tmp_path / "a.cfg", "T = -1\n")), "--out", str(tmp_path / "o")]) == 1
    assert "T must be positive" in capsys.readouterr().err
    assert cli.main(["solve", "--config", str(write(tmp_path / "b.cfg", "colour = red\n")), "--out", str(tmp_path / "o")]) == 1
    assert cli.main(["solve", "--config", str(write(tmp_path / "c.cfg", "just words\n")), "--out", str(tmp_path / "o")]) == 1
    assert cli.main(["solve", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "o")]) == 1


def test_no_convergence_exit(tmp_path):
    cfg = write(tmp_path / "c.cfg", "M = 64\nmax_iter = 1\n")
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert len(report["fixed_point"]["residual_history"]) == 1


def test_particles_deterministic_and_compared(wave_run, tmp_path):
    cfg = write(tmp_path / "p.cfg", "n = 500\nseed = 7\nsnapshot_times = 0.1\n")
    for name in ("p1", "p2"):
        args = ["particles", "--config", str(cfg), "--out", str(tmp_path / name), "--pde", str(wave_run / "out")]
        assert cli.main(args) == 0
    for f in ("particles_0.1.csv", "particles_0.25.csv", "comparison.csv"):
        assert (tmp_path / "p1" / f).read_bytes() == (tmp_path / "p2" / f).read_bytes()
    lines = (tmp_path / "p1" / "comparison.csv").read_text().splitlines()
    assert lines[0] == "t,ks_distance,leftmost,L_t" and len(lines) == 3


def test_seed_required_for_comparison(wave_run, tmp_path):
    cfg = write(tmp_path / "p.cfg", "n = 100\n")
    args = ["particles", "--config", str(cfg), "--out", str(tmp_path / "o"), "--pde", str(wave_run / "out")]
    assert cli.main(args) == 1
    # without a comparison the seed is generated and echoed
    assert cli.main(["particles", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    echo = cli.read_config(tmp_path / "o" / "config.echo", cli.PARTICLE_KEYS)
    assert isinstance(echo["seed"], int)


def test_particle_smoke_run_is_fast(tmp_path):
    cfg = write(tmp_path / "p.cfg", "n = 100\nt_end = 0.1\nseed = 1\n")
    tic = time.perf_counter()
    assert cli.main(["particles", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert time.perf_counter() - tic < 1.0


def test_wave_fixture(tmp_path):
    assert cli.main(["wave", "--c", "1.5", "--out", str(tmp_path)]) == 0
    data = np.loadtxt(tmp_path / "wave.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(0.5 * data[:, 3] + 1.5 * data[:, 2] + data[:, 1])) < 1e-12
    assert cli.main(["wave", "--c", "1.0", "--out", str(tmp_path)]) == 1


def test_worker_override(monkeypatch):
    monkeypatch.setenv("FBP_WORKERS", "3")
    assert cli.worker_count(8) == 3
    monkeypatch.delenv("FBP_WORKERS")
    assert cli.worker_count(8) == 8


def test_console_script(tmp_path):
    result = subprocess.run(["fbp", "wave", "--out", str(tmp_path)], capture_output=True, text=True)
    assert result.returncode == 0
    assert (tmp_path / "wave.csv").exists()
