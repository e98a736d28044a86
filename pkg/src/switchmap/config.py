"""Configuration parsing and validation.

Config files are flat ``key = value`` text with ``#`` comments and dotted
namespaces (``field.gamma = 0.5``).  Every key has a shipped default, so an
empty file yields the reference scenario: four field sources of intensities
(5, 5, 4, 4) at (-2,0), (2,0), (0,2), (0,-2) with decay 0.5 on the
[-5, 5]^2 domain, GPS disk of radius 1 and measurement circle of radius 2
around the origin, gains k1 = k2 = 3I, energy bounds V_u = 0.2025 and
V_l = 1e-4, partition weights (0.2, 0.6, 0.2) and disturbance bound 0.06.

Unknown keys are rejected with their line number; invariant violations name
the violated condition.  Environment variables ``SWITCHMAP_<KEY>`` (upper
case, dots replaced by double underscores, e.g. ``SWITCHMAP_SIM__STEP``)
override file values, which is convenient for CI sweeps.

A ``manifest.json`` produced by a previous run is also accepted wherever a
config path is expected; its embedded config snapshot is loaded verbatim,
which reproduces the run bit for bit.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .dwell import LyapunovBounds, RegionGeometry
from .dynamics import N_STATE, DriftModel
from .engine import EpisodeConfig
from .field import FieldSource, ScalarField
from .gp import GPHyperparams
from .observer import Gains

__all__ = ["ConfigError", "DEFAULTS", "parse_config", "build_config", "ENV_PREFIX"]

ENV_PREFIX = "SWITCHMAP_"

# Canonical key -> (kind, default).  Kinds: int, float, bool, floats (comma
# separated list), matrix (single scalar meaning s*I, or 9 row-major entries).
DEFAULTS: dict[str, tuple[str, object]] = {
    "seed": ("int", 0),
    "field.gamma": ("float", 0.5),
    "field.intensities": ("floats", (5.0, 5.0, 4.0, 4.0)),
    "field.sources_x": ("floats", (-2.0, 2.0, 0.0, 0.0)),
    "field.sources_y": ("floats", (0.0, 0.0, 2.0, -2.0)),
    "field.domain": ("floats", (-5.0, 5.0, -5.0, 5.0)),
    "field.noise_std": ("float", 0.1),
    "geometry.center": ("floats", (0.0, 0.0)),
    "geometry.radius": ("float", 1.0),
    "path.center": ("floats", (0.0, 0.0)),
    "path.radius": ("float", 2.0),
    "path.rate": ("float", 0.25),
    "path.theta0": ("float", 0.0),
    "trajectory.weights": ("floats", (0.2, 0.6, 0.2)),
    "k1": ("matrix", 3.0),
    "k2": ("matrix", 3.0),
    "V_u": ("float", 0.2025),
    "V_l": ("float", 1e-4),
    "g_max": ("float", 0.06),
    "drift.a": ("matrix", 0.5),
    "dwell.safety_factor": ("float", 1.0),
    "dwell.min_available": ("float", 0.25),
    "init.x": ("floats", (0.1, 0.2, 0.0)),
    "init.x_hat": ("floats", (0.2, 0.3, math.pi / 6.0)),
    "sim.step": ("float", 1e-3),
    "sim.measurement_period": ("float", 0.2),
    "sim.output_rate": ("float", 100.0),
    "sim.max_cycles": ("int", 200),
    "sim.max_wall_time": ("float", 300.0),
    "sim.v_tolerance": ("float", 1e-3),
    "sim.oracle_locations": ("bool", False),
    "observer.boundary_layer": ("float", 0.0),
    "gp.amplitude": ("float", 2.0),
    "gp.length_scale": ("float", 1.0),
    "gp.noise_std": ("float", 0.1),
    "gp.jitter": ("float_or_none", None),
    "gp.rmse_stride": ("int", 10),
    "gp.grid_resolution": ("int", 25),
}


class ConfigError(ValueError):
    """Configuration file or invariant error with a precise location/condition."""


def _as_matrix(value) -> np.ndarray:
    """Scalar defaults mean a multiple of the identity."""
    if isinstance(value, np.ndarray):
        return value
    return float(value) * np.eye(N_STATE)


def _parse_value(key: str, kind: str, text: str, where: str):
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "float_or_none":
            return None if text.lower() in ("none", "") else float(text)
        if kind == "bool":
            if text.lower() in ("true", "1", "yes", "on"):
                return True
            if text.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind == "floats":
            return tuple(float(part) for part in text.split(","))
        if kind == "matrix":
            values = tuple(float(part) for part in text.split(","))
            if len(values) == 1:
                return values[0] * np.eye(N_STATE)
            if len(values) == N_STATE * N_STATE:
                return np.array(values).reshape(N_STATE, N_STATE)
            raise ValueError(
                f"expected 1 scalar or {N_STATE * N_STATE} row-major entries, "
                f"got {len(values)}"
            )
        raise AssertionError(f"unhandled kind {kind}")
    except ValueError as exc:
        raise ConfigError(f"{where}: invalid value for '{key}': {exc}") from exc


def _read_pairs(path: Path) -> dict[str, tuple[str, str]]:
    """Parse ``key = value`` lines; returns key -> (raw value, location)."""
    pairs: dict[str, tuple[str, str]] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"{where}: unknown key '{key}'")
        if key in pairs:
            raise ConfigError(f"{where}: duplicate key '{key}'")
        pairs[key] = (value, where)
    return pairs


def _env_overrides() -> dict[str, tuple[str, str]]:
    overrides: dict[str, tuple[str, str]] = {}
    for key in DEFAULTS:
        env_name = ENV_PREFIX + key.upper().replace(".", "__")
        if env_name in os.environ:
            overrides[key] = (os.environ[env_name], f"env {env_name}")
    return overrides


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, np.ndarray):
        return ", ".join(f"{v:.17g}" for v in value.ravel())
    if isinstance(value, tuple):
        return ", ".join(f"{v:.17g}" for v in value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def parse_config(path: str | Path | None = None, overrides: dict[str, str] | None = None) -> EpisodeConfig:
    """Load a config file (or the defaults when ``path`` is None).

    ``overrides`` maps canonical keys to raw value strings and wins over both
    the file and the environment, serving CLI flags such as ``--seed``.
    """
    values: dict[str, object] = {key: default for key, (_, default) in DEFAULTS.items()}

    pairs: dict[str, tuple[str, str]] = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        if p.suffix == ".json":
            snapshot = json.loads(p.read_text()).get("config")
            if not isinstance(snapshot, dict):
                raise ConfigError(f"{p}: manifest has no 'config' snapshot")
            for key, value in snapshot.items():
                if key not in DEFAULTS:
                    raise ConfigError(f"{p}: unknown key '{key}' in manifest config")
                pairs[key] = (str(value), f"{p} (manifest)")
        else:
            pairs = _read_pairs(p)
    pairs.update(_env_overrides())
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"override: unknown key '{key}'")
        pairs[key] = (str(value), "override")

    for key, (raw, where) in pairs.items():
        kind = DEFAULTS[key][0]
        values[key] = _parse_value(key, kind, raw, where)

    return build_config(values)


def build_config(values: dict[str, object]) -> EpisodeConfig:
    """Assemble and validate an :class:`EpisodeConfig` from resolved values."""

    def expect(condition: bool, message: str) -> None:
        if not condition:
            raise ConfigError(message)

    intensities = values["field.intensities"]
    xs = values["field.sources_x"]
    ys = values["field.sources_y"]
    expect(
        len(intensities) == len(xs) == len(ys) and len(intensities) >= 1,
        "field.intensities, field.sources_x and field.sources_y must have the "
        f"same nonzero length, got {len(intensities)}, {len(xs)}, {len(ys)}",
    )
    gamma = values["field.gamma"]
    domain = values["field.domain"]
    expect(len(domain) == 4, f"field.domain needs 4 entries, got {len(domain)}")
    try:
        field = ScalarField(
            sources=tuple(
                FieldSource(position=(sx, sy), intensity=si, decay=gamma)
                for sx, sy, si in zip(xs, ys, intensities)
            ),
            domain_bounds=tuple(domain),
        )
        center = values["geometry.center"]
        expect(len(center) == 2, "geometry.center needs 2 entries")
        geometry = RegionGeometry(gps_center=tuple(center), gps_radius=values["geometry.radius"])
        drift = DriftModel(a_matrix=_as_matrix(values["drift.a"]))
        gains = Gains(
            k1=_as_matrix(values["k1"]),
            k2=_as_matrix(values["k2"]),
            dist_bound=values["g_max"],
        )
        bounds = LyapunovBounds.from_gains(
            v_lower=values["V_l"],
            v_upper=values["V_u"],
            k1=gains.k1,
            k2=gains.k2,
            lipschitz_const=drift.lipschitz_const,
        )
        gp_hyper = GPHyperparams(
            amplitude=values["gp.amplitude"],
            length_scale=values["gp.length_scale"],
            noise_std=values["gp.noise_std"],
            jitter=values["gp.jitter"],
        )
        path_center = values["path.center"]
        expect(len(path_center) == 2, "path.center needs 2 entries")
        cfg = EpisodeConfig(
            field=field,
            geometry=geometry,
            gains=gains,
            bounds=bounds,
            drift=drift,
            gp_hyper=gp_hyper,
            x0=np.asarray(values["init.x"], dtype=float),
            xhat0=np.asarray(values["init.x_hat"], dtype=float),
            path_center=tuple(path_center),
            path_radius=values["path.radius"],
            path_rate=values["path.rate"],
            path_theta0=values["path.theta0"],
            weights=tuple(values["trajectory.weights"]),
            dist_bound=values["g_max"],
            measurement_noise_std=values["field.noise_std"],
            step=values["sim.step"],
            measurement_period=values["sim.measurement_period"],
            output_rate=values["sim.output_rate"],
            seed=values["seed"],
            safety_factor=values["dwell.safety_factor"],
            min_gps_dwell=values["dwell.min_available"],
            v_tolerance=values["sim.v_tolerance"],
            max_cycles=values["sim.max_cycles"],
            max_wall_time=values["sim.max_wall_time"],
            oracle_locations=values["sim.oracle_locations"],
            boundary_layer=values["observer.boundary_layer"],
            rmse_stride=values["gp.rmse_stride"],
            grid_resolution=values["gp.grid_resolution"],
            resolved={key: _format_value(values[key]) for key in DEFAULTS},
        )
        cfg.validate()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg
