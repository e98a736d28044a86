"""Command line interface.

Subcommands::

    switchmap simulate <config> [--out DIR] [--seed N]
    switchmap gp-fit <measurements.csv> [--config CFG] [--out DIR] [--grid-resolution N]
    switchmap dwell <config> --v-entry V --v-exit V
    switchmap field <config> [--out DIR] [--grid-resolution N]
    switchmap evaluate <run-dir> [--stride N] [--grid-resolution N]

Every artifact-producing command writes into one run directory together with
a ``manifest.json`` that snapshots the resolved config and digests every
output file; rerunning with the same config and seed reproduces identical
digests.  Exit status is 0 on success and nonzero with a diagnostic on any
fault.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config
from .dwell import max_dwell_denied, min_dwell_available
from .engine import SimulationFault, fit_and_evaluate, run_episode
from .gp import FieldGP, GPFitError
from . import output as out

__all__ = ["main", "run_cli"]


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="switchmap",
        description="Switched GPS/GPS-denied field-mapping simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a full episode and export all artifacts")
    sim.add_argument("config", nargs="?", default=None, help="config file (defaults apply)")
    sim.add_argument("--out", type=Path, default=Path("runs"), help="output base directory")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")

    fit = sub.add_parser("gp-fit", help="fit a GP to a measurements CSV and export the grid")
    fit.add_argument("measurements", type=Path)
    fit.add_argument("--config", default=None)
    fit.add_argument("--out", type=Path, default=Path("runs"))
    fit.add_argument("--grid-resolution", type=int, default=None)

    dwell = sub.add_parser("dwell", help="print the dwell-time table for given energies")
    dwell.add_argument("config", nargs="?", default=None)
    dwell.add_argument("--v-entry", type=float, required=True,
                       help="error energy on entering the GPS region")
    dwell.add_argument("--v-exit", type=float, required=True,
                       help="error energy on leaving the GPS region")

    grid = sub.add_parser("field", help="export the ground-truth field grid")
    grid.add_argument("config", nargs="?", default=None)
    grid.add_argument("--out", type=Path, default=Path("runs"))
    grid.add_argument("--grid-resolution", type=int, default=50)

    ev = sub.add_parser("evaluate", help="recompute the RMSE curve for a finished run")
    ev.add_argument("run_dir", type=Path)
    ev.add_argument("--stride", type=int, default=None)
    ev.add_argument("--grid-resolution", type=int, default=None)
    return parser


def _read_measurements_csv(path: Path) -> np.ndarray:
    if not path.exists():
        raise ConfigError(f"measurements file not found: {path}")
    rows = [line for line in path.read_text().splitlines() if line.strip()]
    if rows and rows[0].lstrip().startswith("t"):
        rows = rows[1:]
    data = [tuple(float(c) for c in line.split(",")) for line in rows]
    return np.array(data).reshape(-1, 4) if data else np.empty((0, 4))


def _cmd_simulate(args) -> int:
    overrides = {"seed": str(args.seed)} if args.seed is not None else None
    cfg = parse_config(args.config, overrides=overrides)
    run_dir = out.run_directory(args.out, cfg.seed)
    try:
        log = run_episode(cfg)
    except SimulationFault as fault:
        if fault.log is not None:
            out.export_timeseries(run_dir, fault.log)
            out.export_measurements(run_dir, fault.log)
            out.export_dwell_schedule(run_dir, fault.log)
            out.export_summary(run_dir, fault.log)
        out.write_manifest(run_dir, cfg)
        print(f"simulate: FAULT: {fault} (partial artifacts in {run_dir})", file=sys.stderr)
        return 2
    if log.measurements:
        fit_and_evaluate(log, cfg)
    out.export_episode(run_dir, cfg, log)
    summary = log.summary()
    print(f"simulate: completed {summary['cycles']} cycles, "
          f"{summary['measurements']} measurements, max V {summary['max_v']:.6g}, "
          f"artifacts in {run_dir}")
    return 0


def _cmd_gp_fit(args) -> int:
    cfg = parse_config(args.config)
    data = _read_measurements_csv(args.measurements)
    if data.shape[0] == 0:
        print("gp-fit: no measurements in input file", file=sys.stderr)
        return 2
    hyper = cfg.gp_hyper
    model = FieldGP(
        amplitude=hyper.amplitude,
        length_scale=hyper.length_scale,
        noise_std=hyper.noise_std,
        jitter=hyper.jitter,
    ).fit(data[:, 1:3], data[:, 3])
    run_dir = out.run_directory(args.out, cfg.seed)
    resolution = args.grid_resolution or cfg.grid_resolution
    out.export_gp_grid(run_dir, cfg, model, resolution)
    out.write_manifest(run_dir, cfg)
    print(f"gp-fit: fitted m={data.shape[0]} measurements, grid in {run_dir}")
    return 0


def _cmd_dwell(args) -> int:
    cfg = parse_config(args.config)
    bounds = cfg.bounds
    dt_a = min_dwell_available(args.v_entry, bounds)
    dt_u = max_dwell_denied(args.v_exit, bounds, cfg.dist_bound)
    print(f"lambda_a = {bounds.lambda_a:.17g}")
    print(f"lambda_u = {bounds.lambda_u:.17g}")
    print(f"V_l = {bounds.v_lower:.17g}, V_u = {bounds.v_upper:.17g}, "
          f"g_max = {cfg.dist_bound:.17g}")
    print(f"dt_a_min(V_entry={args.v_entry:g}) >= {dt_a:.17g} s")
    print(f"dt_u_max(V_exit={args.v_exit:g}) <= {dt_u:.17g} s")
    return 0


def _cmd_field(args) -> int:
    cfg = parse_config(args.config)
    run_dir = out.run_directory(args.out, cfg.seed)
    out.export_field_grid(run_dir, cfg, args.grid_resolution)
    out.write_manifest(run_dir, cfg)
    print(f"field: grid in {run_dir}")
    return 0


def _cmd_evaluate(args) -> int:
    manifest = args.run_dir / "manifest.json"
    if not manifest.exists():
        print(f"evaluate: no manifest.json in {args.run_dir}", file=sys.stderr)
        return 2
    cfg = parse_config(manifest)
    data = _read_measurements_csv(args.run_dir / "measurements.csv")
    if data.shape[0] == 0:
        print("evaluate: no measurements in run directory", file=sys.stderr)
        return 2
    from .engine import SimLog  # narrow import to build a measurement-only log
    from .field import Measurement

    log = SimLog(
        t=np.empty(0), x=np.empty((0, 3)), xhat=np.empty((0, 3)), xd=np.empty((0, 3)),
        e1=np.empty((0, 3)), e2=np.empty((0, 3)), v=np.empty(0),
        region=np.empty(0, dtype=int), cycle=np.empty(0, dtype=int),
        segment=np.empty(0, dtype=int),
        measurements=[
            Measurement(location=(row[1], row[2]), value=row[3], timestamp=row[0])
            for row in data
        ],
        cycles=[], crossings=[], completed=True, progress=0.0, max_v=0.0, duration=0.0,
    )
    curve = fit_and_evaluate(log, cfg, grid_resolution=args.grid_resolution,
                             stride=args.stride)
    out.export_rmse_curve(args.run_dir, curve)
    print(f"evaluate: {len(curve)} curve points, final rmse {curve[-1].rmse:.6g}")
    return 0


def run_cli(argv: list[str] | None = None) -> int:
    """Parse arguments and dispatch; returns the process exit code."""
    args = _make_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "gp-fit": _cmd_gp_fit,
        "dwell": _cmd_dwell,
        "field": _cmd_field,
        "evaluate": _cmd_evaluate,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, GPFitError, ValueError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
