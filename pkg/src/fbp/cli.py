"""``fbp`` command line: ``solve``, ``particles`` and ``wave``.

Configuration files are flat ``key = value`` text with ``#`` comments.  Keys
and defaults are listed in :data:`SOLVE_KEYS` and :data:`PARTICLE_KEYS`; a
``report.json`` from an earlier run is accepted as well (its ``config``
block is used).
"""

import argparse
import csv
import json
import logging
import math
import os
import secrets
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import density
from .density import SQRT2, make_initial_datum, traveling_wave, wave_datum
from .errors import ConvergenceError, FBPError
from .fixed_point import SolverConfig, k_map, solve_fbp
from .halfline import BoundaryCurve, solve_field
from .particle import compare_to_pde, simulate
from .volterra import TimeGrid

log = logging.getLogger("fbp")

EXIT_OK, EXIT_CONFIG, EXIT_NO_CONVERGENCE = 0, 1, 2


class ConfigError(Exception):
    pass


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text):
    return None if str(text).strip().lower() in ("auto", "none", "") else float(text)


def _optional_int(text):
    return None if str(text).strip().lower() in ("auto", "none", "") else int(text)


def _times(text):
    if isinstance(text, (list, tuple)):
        return [float(t) for t in text]
    text = str(text).strip()
    if text.lower() in ("auto", ""):
        return None
    return [float(t) for t in text.split(",") if t.strip()]


def _scenario(text):
    text = str(text).strip().lower()
    if text not in ("wave", "quartic"):
        raise ValueError(f"scenario must be 'wave' or 'quartic', got {text!r}")
    return text


# key -> (parser, default)
SOLVE_KEYS = {
    "scenario": (_scenario, "quartic"),
    "b": (float, 1.0),
    "c": (float, SQRT2),
    "T": (float, 0.25),
    "M": (int, 256),
    "A": (_optional_float, None),
    "damping": (float, 1.0),
    "tol_fp": (float, 1e-8),
    "max_iter": (int, 100),
    "adaptive_T": (_bool, True),
    "grid": (str, "uniform"),
    "source": (float, 2.0),
    "snapshot_times": (_times, None),
    "workers": (_optional_int, None),
}

PARTICLE_KEYS = {
    "scenario": (_scenario, "wave"),
    "b": (float, 1.0),
    "c": (float, SQRT2),
    "n": (int, 10000),
    "t_end": (float, 0.25),
    "seed": (_optional_int, None),
    "snapshot_times": (_times, None),
    "branching": (_bool, True),
}


def read_config(path, schema):
    """Parse a config file against ``schema``; unknown keys are an error."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            raw = json.loads(text)["config"]
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{path} is not a run report") from exc
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            raw[key] = value
    config = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}")
        if value is None:
            config[key] = None
            continue
        try:
            config[key] = schema[key][0](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
    for key, (_, default) in schema.items():
        config.setdefault(key, default)
    return config


def write_config(config, path):
    lines = []
    for key, value in config.items():
        if value is None:
            value = "auto"
        elif isinstance(value, list):
            value = ",".join(_fmt(v) for v in value)
        elif isinstance(value, float):
            value = _fmt(value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt(x):
    return "%.17g" % x


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def make_datum(config):
    if config["scenario"] == "wave":
        return wave_datum(config["b"], config["c"])
    return make_initial_datum(config["b"])


def worker_count(config_value=None):
    env = os.environ.get("FBP_WORKERS")
    if env:
        return max(1, int(env))
    return config_value or os.cpu_count() or 1


def _snapshot_label(t):
    return "%.6g" % t


def _diagnostics(field, t):
    snap = density.snapshot(field, t)
    row = {
        "t": t,
        "L_t": float(field.curve(t)),
        "mass": snap.mass,
        "v_mass": density.v_mass(field, t),
        "boundary_slope": snap.boundary_slope,
        "boundary_trace_error": density.boundary_trace(field, t) - field.boundary_value(t),
        "min_rho": snap.min_rho,
    }
    if 0 < t < field.grid.T:
        lhs, rhs = density.stefan_velocity_check(field, t)
        row.update(stefan_lhs=lhs, stefan_rhs=rhs, stefan_residual=lhs - rhs)
    else:
        row.update(stefan_lhs=None, stefan_rhs=None, stefan_residual=None)
    return row, snap


def run_solve(config_path, out_dir):
    """Drive one free-boundary solve; returns the exit status."""
    timings = {}
    start = time.perf_counter()
    try:
        cfg = read_config(config_path, SOLVE_KEYS)
        solver_cfg = SolverConfig(
            b=cfg["b"],
            T=cfg["T"],
            M=cfg["M"],
            A=cfg["A"],
            damping=cfg["damping"],
            tol_fp=cfg["tol_fp"],
            max_iter=cfg["max_iter"],
            adaptive_T=cfg["adaptive_T"],
            grid=cfg["grid"],
            source=cfg["source"],
        )
        datum = make_datum(cfg)
    except (ConfigError, FBPError, ValueError) as exc:
        print(f"fbp solve: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {"config": cfg}
    timings["setup"] = time.perf_counter() - start

    tic = time.perf_counter()
    try:
        curve, field, fp = solve_fbp(solver_cfg, datum)
    except ConvergenceError as exc:
        timings["fixed_point"] = time.perf_counter() - tic
        fp_report = getattr(exc, "report", None)
        report["fixed_point"] = fp_report.to_dict() if fp_report else {"residual_history": exc.history}
        report["fixed_point"].setdefault("residual_history", exc.history)
        report["error"] = str(exc)
        report["timings"] = timings
        (out / "report.json").write_text(json.dumps(_json_safe(report), indent=2))
        print(f"fbp solve: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except FBPError as exc:
        print(f"fbp solve: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    timings["fixed_point"] = time.perf_counter() - tic
    report["fixed_point"] = fp.to_dict()

    t = curve.grid.nodes
    residual = k_map(curve, field.q) - curve.values
    _write_csv(out / "boundary.csv", ["t", "L", "q", "K_residual"], zip(t, curve.values, field.q.values, residual))

    T_used = curve.grid.T
    times = cfg["snapshot_times"] or [T_used / 4, T_used / 2, T_used]
    times = [min(float(s), T_used) for s in times]
    tic = time.perf_counter()
    with ThreadPoolExecutor(max_workers=worker_count(cfg["workers"])) as pool:
        results = list(pool.map(lambda s: _diagnostics(field, s), times))
    timings["diagnostics"] = time.perf_counter() - tic
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for _, snap in results:
        _write_csv(
            snap_dir / f"rho_{_snapshot_label(snap.t)}.csv",
            ["x", "rho", "v"],
            zip(snap.x_nodes, snap.rho_values, snap.v_values),
        )
    report["diagnostics"] = [row for row, _ in results]
    if cfg["scenario"] == "wave":
        exact = cfg["b"] + traveling_wave(cfg["c"]).c * t
        report["oracle"] = {"sup_abs_L_minus_wave": float(np.max(np.abs(curve.values - exact)))}
    timings["total"] = time.perf_counter() - start
    report["timings"] = timings
    (out / "report.json").write_text(json.dumps(_json_safe(report), indent=2))
    write_config(cfg, out / "config.echo")
    return EXIT_OK


def load_field(pde_dir):
    """Rebuild the field solution of an earlier ``fbp solve`` from its outputs."""
    pde_dir = Path(pde_dir)
    cfg = read_config(pde_dir / "report.json", SOLVE_KEYS)
    rows = np.loadtxt(pde_dir / "boundary.csv", delimiter=",", skiprows=1, ndmin=2)
    grid = TimeGrid(rows[:, 0])
    curve = BoundaryCurve(grid, rows[:, 1])
    return solve_field(curve, make_datum(cfg), cfg["source"])


def run_particles(config_path, out_dir, pde_dir=None):
    """Particle simulation, optionally compared with an earlier PDE run."""
    try:
        cfg = read_config(config_path, PARTICLE_KEYS)
        if cfg["seed"] is None:
            if pde_dir is not None:
                raise ConfigError("a seed is required when comparing with a PDE run")
            cfg["seed"] = secrets.randbits(63)
        datum = make_datum(cfg)
        times = cfg["snapshot_times"] or [cfg["t_end"]]
        measures = simulate(cfg["n"], datum, cfg["t_end"], cfg["seed"], times, cfg["branching"])
        field = load_field(pde_dir) if pde_dir is not None else None
        rows = compare_to_pde([m for m in measures if m.t > 0], field) if field is not None else None
    except (ConfigError, FBPError, ValueError, OSError) as exc:
        print(f"fbp particles: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for m in measures:
        _write_csv(out / f"particles_{_snapshot_label(m.t)}.csv", ["x"], ([x] for x in m.sorted_positions))
    if rows is not None:
        _write_csv(
            out / "comparison.csv",
            ["t", "ks_distance", "leftmost", "L_t"],
            ([r["t"], r["ks_distance"], r["leftmost"], r["L_t"]] for r in rows),
        )
    write_config(cfg, out / "config.echo")
    return EXIT_OK


def run_wave(c, out_dir, n_points=1001):
    try:
        wave = traveling_wave(c)
    except FBPError as exc:
        print(f"fbp wave: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    U = wave_datum(0.0, wave.c).support_width
    u = np.linspace(0.0, U, n_points)
    _write_csv(
        out / "wave.csv",
        ["u", "w", "w_prime", "w_second"],
        zip(u, wave(u), wave.derivative(u, 1), wave.derivative(u, 2)),
    )
    params = {"c": wave.c, "lam1": wave.lam1, "lam2": wave.lam2, "amplitude": wave.amplitude, "u_max": U}
    (out / "wave.json").write_text(json.dumps(params, indent=2))
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(prog="fbp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="solve the free boundary problem")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p = sub.add_parser("particles", help="simulate the N-particle system")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pde", help="output directory of an earlier 'fbp solve'")
    p = sub.add_parser("wave", help="write the closed-form traveling wave")
    p.add_argument("--c", type=float, default=SQRT2)
    p.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.command == "solve":
        return run_solve(args.config, args.out)
    if args.command == "particles":
        return run_particles(args.config, args.out, args.pde)
    return run_wave(args.c, args.out)


if __name__ == "__main__":
    sys.exit(main())
