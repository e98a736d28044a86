"""Run-directory output: CSV/JSON artifacts, content digests and the manifest.

All numbers are written as decimals with 17 significant digits so any
IEEE-754 double round-trips exactly, making outputs reproducible bit for bit
from (config, seed).  A run directory contains the time series, measurement
list, ground-truth grid, GP prediction grid, RMSE curve, dwell schedule,
summary and finally ``manifest.json`` listing every file with its SHA-256
digest plus the fully resolved config snapshot.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .engine import EpisodeConfig, RmsePoint, SimLog, domain_grid, fit_and_evaluate
from .field import eval_field_grid
from .gp import FieldGP

__all__ = [
    "SCHEMAS",
    "RunManifest",
    "fmt",
    "write_csv",
    "write_json",
    "write_manifest",
    "run_directory",
    "export_episode",
    "export_field_grid",
    "export_gp_grid",
    "export_rmse_curve",
]

# Stable column orders, bumped on any schema change.
SCHEMAS = {
    "timeseries": "switchmap.timeseries.v1",
    "measurements": "switchmap.measurements.v1",
    "field_grid": "switchmap.field_grid.v1",
    "gp_grid": "switchmap.gp_grid.v1",
    "rmse_curve": "switchmap.rmse_curve.v1",
    "dwell_schedule": "switchmap.dwell_schedule.v1",
    "summary": "switchmap.summary.v1",
    "manifest": "switchmap.manifest.v1",
}

TIMESERIES_COLUMNS = (
    "t,x,y,heading,xhat_x,xhat_y,xhat_heading,xd_x,xd_y,xd_heading,"
    "e1_x,e1_y,e1_heading,e2_x,e2_y,e2_heading,V,region,cycle,segment"
)


def fmt(value) -> str:
    """Round-trip-safe decimal rendering for one cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(fmt(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def sha256_of(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run and check its outputs."""

    version: str
    seed: int
    config: dict[str, str]
    files: dict[str, str]  # file name -> sha256
    schemas: dict[str, str]

    def to_payload(self) -> dict:
        return {
            "schema": SCHEMAS["manifest"],
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "files": self.files,
            "schemas": self.schemas,
        }


def write_manifest(out_dir: Path, cfg: EpisodeConfig) -> RunManifest:
    """Digest every file already in ``out_dir`` and write ``manifest.json``."""
    files = {
        p.name: sha256_of(p)
        for p in sorted(out_dir.iterdir())
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = RunManifest(
        version=__version__,
        seed=cfg.seed,
        config=dict(cfg.resolved),
        files=files,
        schemas=dict(SCHEMAS),
    )
    write_json(out_dir / "manifest.json", manifest.to_payload())
    return manifest


def run_directory(base: Path, seed: int) -> Path:
    """Create a fresh run directory named by UTC timestamp and seed."""
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    candidate = base / f"run-{stamp}-seed{seed}"
    suffix = 0
    while candidate.exists():
        suffix += 1
        candidate = base / f"run-{stamp}-seed{seed}.{suffix}"
    candidate.mkdir(parents=True)
    return candidate


def export_field_grid(out_dir: Path, cfg: EpisodeConfig, resolution: int) -> Path:
    grid = domain_grid(cfg.field, resolution)
    truth = eval_field_grid(cfg.field, grid)
    path = out_dir / "field_grid.csv"
    write_csv(path, "x,y,h", zip(grid[:, 0], grid[:, 1], truth))
    return path


def export_gp_grid(out_dir: Path, cfg: EpisodeConfig, model: FieldGP, resolution: int) -> Path:
    grid = domain_grid(cfg.field, resolution)
    mean, var = model.predict(grid, return_var=True)
    path = out_dir / "gp_grid.csv"
    write_csv(path, "x,y,mean,variance", zip(grid[:, 0], grid[:, 1], mean, var))
    return path


def export_measurements(out_dir: Path, log: SimLog) -> Path:
    path = out_dir / "measurements.csv"
    write_csv(
        path,
        "t,x,y,z",
        ((m.timestamp, m.location[0], m.location[1], m.value) for m in log.measurements),
    )
    return path


def export_rmse_curve(out_dir: Path, curve: list[RmsePoint]) -> Path:
    path = out_dir / "rmse_curve.csv"
    write_csv(path, "m,rmse,nrmse", ((p.m, p.rmse, p.normalized) for p in curve))
    return path


def export_timeseries(out_dir: Path, log: SimLog) -> Path:
    path = out_dir / "timeseries.csv"
    rows = (
        (
            log.t[i], *log.x[i], *log.xhat[i], *log.xd[i], *log.e1[i], *log.e2[i],
            log.v[i], log.region[i], log.cycle[i], log.segment[i],
        )
        for i in range(log.t.shape[0])
    )
    write_csv(path, TIMESERIES_COLUMNS, rows)
    return path


def export_dwell_schedule(out_dir: Path, log: SimLog) -> Path:
    path = out_dir / "dwell_schedule.json"
    payload = {
        "schema": SCHEMAS["dwell_schedule"],
        "cycles": [
            {
                "cycle": r.cycle,
                "t_a": r.t_a,
                "dt_a": r.dt_a,
                "v_entry": r.v_entry,
                "t_u": r.t_u,
                "dt_u": r.dt_u,
                "v_exit": r.v_exit,
                "partition_times": list(r.partition_times) if r.partition_times else None,
            }
            for r in log.cycles
        ],
        "crossings": [{"t": c.t, "direction": c.direction} for c in log.crossings],
    }
    write_json(path, payload)
    return path


def export_summary(out_dir: Path, log: SimLog) -> Path:
    path = out_dir / "summary.json"
    payload = {"schema": SCHEMAS["summary"], **log.summary()}
    if log.rmse_curve:
        payload["final_rmse"] = log.rmse_curve[-1].rmse
        payload["final_nrmse"] = log.rmse_curve[-1].normalized
    write_json(path, payload)
    return path


def export_episode(out_dir: Path, cfg: EpisodeConfig, log: SimLog,
                   grid_resolution: int | None = None) -> RunManifest:
    """Write the full artifact set for a finished episode, then the manifest."""
    resolution = cfg.grid_resolution if grid_resolution is None else grid_resolution
    export_timeseries(out_dir, log)
    export_measurements(out_dir, log)
    export_field_grid(out_dir, cfg, resolution)
    if log.measurements:
        curve = log.rmse_curve or fit_and_evaluate(log, cfg, grid_resolution=resolution)
        export_rmse_curve(out_dir, curve)
        export_gp_grid(out_dir, cfg, log.gp_model, resolution)
    export_dwell_schedule(out_dir, log)
    export_summary(out_dir, log)
    return write_manifest(out_dir, cfg)
