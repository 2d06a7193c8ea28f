"""Command-line entry point.

Exit codes: 0 success (a collapsed pushover is a success), 2 configuration
error, 3 mesh error, 4 solver breakdown, 5 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .analysis import (
    AnalysisError,
    SensorError,
    build_model,
    compute_amplification,
    run_pushover,
    run_static,
    run_time_history,
)
from .config import ConfigError, RunConfig, applied_defaults, dump_config, parse_config
from .elements import ElementGeometryError
from .fem import LinearSolverError
from .io import gauss_to_nodes, read_json, write_json, write_table, write_vtk
from .loads import LoadError, synthesize_wind_series, write_series_csv
from .materials import TABLE1_CORRECTIONS
from .mesh import MeshError, generate_half_model, mirror_full, validate_mesh, write_mesh_text
from .similitude import ScaleLaw, conversion_table, displacement_check

EXIT_OK, EXIT_CONFIG, EXIT_MESH, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4, 5
CASE_KINDS = {"static": "static", "history": "time_history", "pushover": "pushover"}

log = logging.getLogger("windfound")


class _Failure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _mesh(cfg: RunConfig):
    try:
        mesh = generate_half_model(cfg.geometry)
    except (MeshError, ElementGeometryError) as exc:
        raise _Failure(EXIT_MESH, f"mesh error: {exc}") from None
    diag = validate_mesh(mesh)
    if not diag.ok:
        raise _Failure(EXIT_MESH, "mesh error: " + "; ".join(diag.messages))
    if not cfg.analysis.half_model:
        mesh = mirror_full(mesh)
    return mesh, diag


def make_series(cfg: RunConfig):
    w = cfg.wind
    mean = w.mean_force if w.mean_force is not None else cfg.simplified_loads().Fr
    return synthesize_wind_series(mean, w.amplitude_ratio, w.period, w.duration, w.dt, w.seed,
                                  w.random_ratio, w.hold)


def manifest(cfg: RunConfig, raw: dict, model=None, extra: dict | None = None) -> dict:
    loads = cfg.simplified_loads()
    doc = {
        "tool": "windfound",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "config_hash": cfg.digest(),
        "resolved_config": cfg.to_dict(),
        "applied_defaults": applied_defaults(raw),
        "material_corrections": [dataclasses.asdict(c) for c in TABLE1_CORRECTIONS],
        "dropped_load_components": [list(d) for d in loads.dropped],
        "seed": cfg.wind.seed,
        "simplified_loads": {"Fz": loads.Fz, "Fr": loads.Fr, "Mr": loads.Mr, "G1": loads.G1, "G2": loads.G2},
        "moment_arm": cfg.moment_arm,
    }
    if model is not None:
        doc["interface"] = {"mode": model.interface_mode, "penalty_factor": model.penalty_factor,
                            "normal_stiffness_Pa_per_m": model.k_normal, "friction": model.friction}
        doc["dof"] = {"total": int(model.ndof), "free": int(model.free.size)}
    if extra:
        doc.update(extra)
    return doc


def _convergence_log(entries):
    return [{k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in e.items()} for e in entries]


def run_case(cfg: RunConfig, raw: dict, out: Path) -> int:
    """Execute one configured analysis and write its artifacts."""
    t0 = time.perf_counter()
    mesh, diag = _mesh(cfg)
    model = build_model(materials=cfg.material_set(), interface=cfg.analysis.interface,
                        penalty_factor=cfg.analysis.penalty_factor, bbar=cfg.analysis.bbar, mesh=mesh)
    t_setup = time.perf_counter() - t0
    loads = cfg.simplified_loads()
    settings = cfg.analysis.solver
    arm = cfg.moment_arm
    kind = cfg.analysis.kind
    formats = set(cfg.output.formats)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _Failure(EXIT_IO, f"cannot create output directory {out}: {exc}") from None
    summary = {"kind": kind, "config_hash": cfg.digest()}
    fields = {}
    try:
        if kind == "static":
            res = run_static(model, loads, settings, arm=arm)
            summary.update({"converged": res.converged, "status": res.status, "fraction": res.fraction,
                            "sensors": res.sensors, "baseline_sensors": res.baseline_sensors,
                            "equilibrium": res.equilibrium})
            summary["limit_checks"] = {"displacement": displacement_check(res.sensors["ux_top"]),
                                       "settlement": displacement_check(res.sensors["settlement"])}
            if "csv" in formats:
                write_table(out / "sensors.csv", ["sensor", "baseline", "value", "delta"],
                            [[k, res.baseline_sensors[k], v, v - res.baseline_sensors[k]]
                             for k, v in res.sensors.items()])
            entries = res.log
        elif kind == "time_history":
            series = make_series(cfg)
            res = run_time_history(model, series, loads, arm=arm, settings=settings)
            static_model = build_model(materials=cfg.material_set(), interface=cfg.analysis.interface,
                                       penalty_factor=cfg.analysis.penalty_factor, bbar=cfg.analysis.bbar,
                                       mesh=mesh)
            static = run_static(static_model, dataclasses.replace(loads, Fr=series.mean_force,
                                                                  Mr=series.mean_force * arm),
                                settings, arm=arm)
            amp = compute_amplification(res, static, cfg.geometry.base_radius)
            summary.update({"completed": res.completed, "samples": res.n_samples, "message": res.message,
                            "equilibrium_error": res.equilibrium_error, "amplification": amp.summary()})
            if res.n_samples:
                peak = {c: float(np.max(np.abs(res.column(c)))) for c in res.columns}
                summary["peak_abs_deltas"] = peak
                summary["limit_checks"] = {"displacement": displacement_check(peak["ux_top"]),
                                           "settlement": displacement_check(peak["settlement"])}
            if "csv" in formats:
                rows = [["baseline", "baseline"] + list(res.baseline)]
                rows += [[t, f] + list(r) for t, f, r in zip(res.times, res.forces, res.records)]
                write_table(out / "history.csv", ["time_s", "force_N"] + res.columns, rows)
                write_series_csv(series, out / "wind_series.csv")
            soil = model.soil_group()
            fields["amplification"] = np.nanmean(amp.ratio.reshape(soil.eq_plastic.shape), axis=1) \
                if np.any(np.isfinite(amp.ratio)) else None
            entries = res.log
            if not res.completed:
                summary["status"] = "truncated"
        else:
            res = run_pushover(model, loads, increment=cfg.analysis.pushover_increment, arm=arm,
                               settings=settings, direction=cfg.analysis.pushover_direction,
                               load_cap=cfg.analysis.load_cap if cfg.analysis.load_cap is not None else np.inf,
                               soil_gravity=cfg.analysis.soil_gravity,
                               structure_gravity=cfg.analysis.structure_gravity)
            summary.update(res.summary())
            summary["equilibrium_error"] = res.equilibrium_error
            if "csv" in formats:
                write_table(out / "pushover.csv", ["load_N", "displacement_m"], zip(res.loads, res.displacements))
                write_table(out / "uplift.csv", ["x_m", "y_m", "gap_m"],
                            [[x, y, g] for (x, y), g in zip(res.pair_xy, res.uplift)])
            entries = res.log
    except (AnalysisError, LinearSolverError) as exc:
        raise _Failure(EXIT_SOLVER, f"solver breakdown: {exc}") from None
    except SensorError as exc:
        raise _Failure(EXIT_MESH, f"mesh error: {exc}") from None
    except LoadError as exc:
        raise _Failure(EXIT_CONFIG, f"configuration error: {exc}") from None

    if cfg.output.field_output and "vtk" in formats:
        point = {"displacement": model.u.reshape(-1, 3)}
        point["eq_plastic"] = gauss_to_nodes(mesh.n_nodes, mesh.hexes, model.element_field("eq_plastic"))
        if fields.get("amplification") is not None:
            elem = np.full(len(mesh.hexes), np.nan)
            elem[model.soil_group().elem_ids] = fields["amplification"]
            point["amplification"] = gauss_to_nodes(mesh.n_nodes, mesh.hexes, elem)
        write_vtk(out / "fields.vtk", mesh.nodes, mesh.hexes, point_data=point,
                  cell_data={"region": np.unique(mesh.hex_region, return_inverse=True)[1].astype(float)})
    if "json" in formats:
        write_json(out / "summary.json", summary)
    wall = time.perf_counter() - t0
    doc = manifest(cfg, raw, model, {
        "mesh": diag.as_dict(),
        "convergence_log": _convergence_log(entries),
        "solver_stats": dict(model.stats),
        "timings_s": {"setup": t_setup, "total": wall},
    })
    write_json(out / "manifest.json", doc)
    (out / "resolved_config.yaml").write_text(dump_config(cfg))
    return EXIT_OK


def _load(path) -> tuple[RunConfig, dict]:
    cfg = parse_config(path)
    raw = yaml.safe_load(Path(path).read_text()) or {}
    return cfg, raw


def _simulate_one(kind: str, path: str, out: str | None) -> tuple[int, str]:
    try:
        cfg, raw = _load(path)
        cfg = dataclasses.replace(cfg, analysis=dataclasses.replace(cfg.analysis, kind=CASE_KINDS[kind]))
        target = Path(out) if out else Path(cfg.output.directory)
        code = run_case(cfg, raw, target)
        return code, f"{path}: done -> {target}"
    except ConfigError as exc:
        return EXIT_CONFIG, f"{path}: configuration error: {exc}"
    except _Failure as exc:
        return exc.code, f"{path}: {exc}"
    except OSError as exc:
        return EXIT_IO, f"{path}: I/O error: {exc}"


def cmd_simulate(args) -> int:
    jobs = max(1, args.jobs)
    configs = args.config
    outs = [None] * len(configs)
    if args.out:
        outs = [args.out] if len(configs) == 1 else [str(Path(args.out) / Path(c).stem) for c in configs]
    if jobs == 1 or len(configs) == 1:
        results = [_simulate_one(args.kind, c, o) for c, o in zip(configs, outs)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_simulate_one, [args.kind] * len(configs), configs, outs))
    for code, msg in results:
        print(msg, file=sys.stderr if code else sys.stdout)
    return max(code for code, _ in results)


def cmd_windgen(args) -> int:
    try:
        if args.config:
            cfg, _ = _load(args.config)
            series = make_series(cfg)
        else:
            series = synthesize_wind_series(args.mean_force, args.amplitude_ratio, args.period, args.duration,
                                            args.dt, args.seed, args.random_ratio)
    except (ConfigError, LoadError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        write_series_csv(series, args.out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(series)} samples to {args.out}")
    return EXIT_OK


def cmd_mesh(args) -> int:
    try:
        cfg, _ = _load(args.config) if args.config else (RunConfig(), {})
        mesh, diag = _mesh(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _Failure as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    for k, v in diag.as_dict().items():
        print(f"{k}: {v}")
    if args.out:
        try:
            write_mesh_text(mesh, args.out)
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def cmd_check(args) -> int:
    law = ScaleLaw(args.length_ratio, args.modulus_ratio, args.density_ratio)
    try:
        summary = read_json(args.result)
    except (OSError, ValueError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    values = {}
    sensors = summary.get("peak_abs_deltas") or summary.get("sensors") or {}
    for key, kind in (("ux_top", "displacement"), ("settlement", "displacement")):
        if key in sensors and sensors[key] is not None:
            values[key] = (sensors[key], kind)
    for key, val in sensors.items():
        if key.startswith("P") and val is not None:
            values[key] = (val, "pressure")
    if summary.get("ultimate_load_N") is not None:
        values["ultimate_load"] = (summary["ultimate_load_N"], "force")
    print(f"{'quantity':16s} {'kind':13s} {'model':>14s} {'prototype':>14s}")
    for row in conversion_table(values, law):
        print(f"{row['name']:16s} {row['kind']:13s} {row['model']:14.6g} {row['prototype']:14.6g}")
    print(f"gravity distortion factor: {law.gravity_distortion:g}")
    ok = True
    for key in ("ux_top", "settlement"):
        if key in values:
            chk = displacement_check(values[key][0], law)
            ok &= chk["ok"]
            print(f"{key}: prototype {chk['prototype'] * 1e3:.3f} mm vs allowable {chk['allowable'] * 1e3:.0f} mm"
                  f" -> {'OK' if chk['ok'] else 'EXCEEDED'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="windfound", description="Wind-turbine spread foundation simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run static, history or pushover analyses")
    s.add_argument("kind", choices=sorted(CASE_KINDS))
    s.add_argument("config", nargs="+", help="YAML run configuration(s)")
    s.add_argument("--out", help="output directory (per-config subdirectories when several)")
    s.add_argument("--jobs", type=int, default=1, help="parallel independent runs")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("windgen", help="write a wind-force series CSV without solving")
    w.add_argument("--config")
    w.add_argument("--mean-force", type=float, default=1000.0)
    w.add_argument("--amplitude-ratio", type=float, default=0.2)
    w.add_argument("--period", type=float, default=600.0)
    w.add_argument("--duration", type=float, default=1200.0)
    w.add_argument("--dt", type=float, default=1.0)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--random-ratio", type=float, default=0.05)
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_windgen)

    m = sub.add_parser("mesh", help="generate and validate the mesh")
    m.add_argument("--config")
    m.add_argument("--out")
    m.set_defaults(func=cmd_mesh)

    c = sub.add_parser("check", help="similitude conversions and limit checks for a summary.json")
    c.add_argument("result")
    c.add_argument("--length-ratio", type=float, default=10.0)
    c.add_argument("--modulus-ratio", type=float, default=1.0)
    c.add_argument("--density-ratio", type=float, default=1.0)
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
