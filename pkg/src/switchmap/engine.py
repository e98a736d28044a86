"""Episode orchestration: plant, observer, supervisor and trajectory in one loop.

Per integration step the engine freezes the disturbance and the feedback flag
(from the *true* position; the boundary counts as available), then advances
the coupled plant/observer system with one RK4 step in which the desired
trajectory, the tracking controller and the sliding correction are evaluated
at every stage.  Stage evaluation is what keeps the closed-loop tracking
error on its exact exponential decay to integrator accuracy; holding the
control constant across a step would degrade that to first order.

Phase scheduling is time-driven: when the active window ends, the supervisor
reads the current error energy (latched at the last step with feedback) and
computes the next window length from the dwell bounds, snapped to the step
grid (up for minimum dwells, down for maximum dwells, so both inequalities
are preserved).  Region crossings of the true position are detected each
step and recorded for verification.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .dwell import (
    DwellSchedule,
    LyapunovBounds,
    Region,
    RegionGeometry,
    detect_crossing,
    max_dwell_denied,
    min_dwell_available,
    region_of,
)
from .dynamics import DisturbanceModel, DriftModel, N_STATE
from .field import Measurement, ScalarField, eval_field_grid, sample_measurement
from .gp import FieldGP, GPHyperparams, evaluate_rmse
from .observer import Gains, lyapunov, sgn
from .trajectory import (
    GpsPlan,
    MeasurementPath,
    SegmentPlan,
    build_segment_plan,
    desired_state,
    partition_rho,
    project_boundary,
    path_point,
)

__all__ = [
    "EpisodeConfig",
    "SimLog",
    "CycleRecord",
    "CrossingEvent",
    "RmsePoint",
    "SimulationFault",
    "run_episode",
    "fit_and_evaluate",
    "step_closed_loop",
]

# Default floor on the feedback-window length (seconds).  The dwell bound is
# only a minimum, and a near-zero window would force the return blend from
# the cushion to the boundary to an unbounded desired speed.
MIN_GPS_DWELL = 0.25


class SimulationFault(RuntimeError):
    """Episode-aborting fault; carries the partial log for diagnosis."""

    def __init__(self, message: str, log: "SimLog | None" = None):
        super().__init__(message)
        self.log = log


@dataclass
class EpisodeConfig:
    """Fully resolved inputs for one simulated episode."""

    field: ScalarField
    geometry: RegionGeometry
    gains: Gains
    bounds: LyapunovBounds
    drift: DriftModel
    gp_hyper: GPHyperparams
    x0: np.ndarray
    xhat0: np.ndarray
    path_center: tuple[float, float] = (0.0, 0.0)
    path_radius: float = 2.0
    path_rate: float = 0.25
    path_theta0: float = 0.0
    weights: tuple[float, float, float] = (0.2, 0.6, 0.2)
    dist_bound: float = 0.06
    measurement_noise_std: float = 0.1
    step: float = 1e-3
    measurement_period: float = 0.2
    output_rate: float = 100.0
    seed: int = 0
    safety_factor: float = 1.0
    min_gps_dwell: float = MIN_GPS_DWELL
    v_tolerance: float = 1e-3
    max_cycles: int = 200
    max_wall_time: float = 300.0
    oracle_locations: bool = False
    boundary_layer: float = 0.0
    rmse_stride: int = 10
    grid_resolution: int = 25
    resolved: dict[str, str] = dataclass_field(default_factory=dict)

    def __post_init__(self) -> None:
        self.x0 = np.asarray(self.x0, dtype=float)
        self.xhat0 = np.asarray(self.xhat0, dtype=float)

    def make_path(self) -> MeasurementPath:
        return MeasurementPath(
            center=self.path_center,
            radius=self.path_radius,
            nominal_rate=self.path_rate,
            progress=self.path_theta0,
        )

    def validate(self) -> None:
        """Cross-field invariant checks; raises ValueError naming the condition."""
        for name, vec in (("init.x", self.x0), ("init.x_hat", self.xhat0)):
            if vec.shape != (N_STATE,) or not np.all(np.isfinite(vec)):
                raise ValueError(f"{name} must be a finite 3-vector, got {vec}")
        self.gains.validate(self.drift.lipschitz_const)
        if region_of(self.x0[:2], self.geometry) != Region.AVAILABLE:
            raise ValueError(
                f"initial position {self.x0[:2]} must lie inside the GPS disk"
            )
        if self.path_radius <= self.geometry.gps_radius:
            raise ValueError(
                f"measurement path radius ({self.path_radius:g}) must exceed the "
                f"GPS radius ({self.geometry.gps_radius:g})"
            )
        depth = 2.0 * math.sqrt(self.bounds.v_upper)
        if depth >= self.geometry.gps_radius:
            raise ValueError(
                f"cushion depth 2*sqrt(V_u) = {depth:g} must be smaller than the "
                f"GPS radius {self.geometry.gps_radius:g}"
            )
        w = self.weights
        if len(w) != 3 or any(not (0 < wj < 1) for wj in w):
            raise ValueError(f"trajectory.weights must lie strictly inside (0, 1), got {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"trajectory.weights must sum to 1, got {sum(w)!r}")
        if self.step <= 0:
            raise ValueError(f"sim.step must be > 0, got {self.step}")
        if self.measurement_period <= 0:
            raise ValueError(f"sim.measurement_period must be > 0, got {self.measurement_period}")
        if not (0 < self.output_rate <= 1.0 / self.step + 1e-9):
            raise ValueError(
                f"sim.output_rate must lie in (0, 1/step={1.0 / self.step:g}], "
                f"got {self.output_rate:g}"
            )
        if not (0 < self.safety_factor <= 1.0):
            raise ValueError(f"dwell.safety_factor must lie in (0, 1], got {self.safety_factor}")
        if self.min_gps_dwell <= 0:
            raise ValueError(f"dwell.min_available must be > 0, got {self.min_gps_dwell}")
        if self.v_tolerance < 0:
            raise ValueError(f"sim.v_tolerance must be >= 0, got {self.v_tolerance}")
        if self.max_cycles < 1:
            raise ValueError(f"sim.max_cycles must be >= 1, got {self.max_cycles}")
        if self.rmse_stride < 1:
            raise ValueError(f"gp.rmse_stride must be >= 1, got {self.rmse_stride}")
        if self.grid_resolution < 2:
            raise ValueError(f"gp.grid_resolution must be >= 2, got {self.grid_resolution}")


@dataclass(frozen=True)
class CrossingEvent:
    """True-position boundary crossing, refined within the straddling step."""

    t: float
    direction: str  # "exit" leaves the GPS disk, "entry" re-enters it


@dataclass(frozen=True)
class CycleRecord:
    """Per-cycle schedule bookkeeping; denied-window fields stay None when
    the episode terminates during the feedback window."""

    cycle: int
    t_a: float
    dt_a: float
    v_entry: float
    t_u: float | None = None
    dt_u: float | None = None
    v_exit: float | None = None
    partition_times: tuple[float, float, float] | None = None

    def schedule(self) -> DwellSchedule | None:
        """Validated switching record; None while the denied window is open."""
        if self.t_u is None:
            return None
        return DwellSchedule(
            cycle_index=self.cycle, t_a=self.t_a, t_u=self.t_u,
            dt_a=self.dt_a, dt_u=self.dt_u, partition_times=self.partition_times,
        )


@dataclass(frozen=True)
class RmsePoint:
    """RMSE of a GP fitted on the first ``m`` measurements."""

    m: int
    rmse: float
    normalized: float | None


@dataclass
class SimLog:
    """Time-indexed god view of one episode plus schedule and measurement data."""

    t: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    xd: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    v: np.ndarray
    region: np.ndarray
    cycle: np.ndarray
    segment: np.ndarray
    measurements: list[Measurement]
    cycles: list[CycleRecord]
    crossings: list[CrossingEvent]
    completed: bool
    progress: float
    max_v: float
    duration: float
    gp_model: FieldGP | None = None
    rmse_curve: list[RmsePoint] | None = None

    def summary(self) -> dict:
        return {
            "completed": self.completed,
            "progress": self.progress,
            "max_v": self.max_v,
            "duration": self.duration,
            "cycles": len(self.cycles),
            "measurements": len(self.measurements),
            "crossings": len(self.crossings),
        }


def _linmap(m: np.ndarray):
    """Matrix-vector product, specialised to a scalar multiply when possible."""
    mm = np.asarray(m, dtype=float)
    if np.array_equal(mm, mm[0, 0] * np.eye(mm.shape[0])):
        s = float(mm[0, 0])
        return lambda v: s * v
    return lambda v: mm @ v


def _make_stepper(drift: DriftModel, gains: Gains, boundary_layer: float):
    """Bind the gain/drift maps once; returns the per-step RK4 closure."""
    apply_a = _linmap(drift.a_matrix)
    apply_k1 = _linmap(gains.k1)
    apply_k2 = _linmap(gains.k2)
    g_bar = gains.dist_bound

    def step(t, x, xhat, g, region, plan, path, h):
        des = (
            desired_state(t, plan, path),
            desired_state(t + 0.5 * h, plan, path),
            desired_state(t + h, plan, path),
        )
        available = region == Region.AVAILABLE

        def derivs(des_i, xs, xhs):
            e2 = xhs - des_i.x
            u = des_i.xdot - apply_a(xhs) - apply_k2(e2)
            if available:
                e1 = xs - xhs
                v_r = apply_k1(e1) + g_bar * sgn(e1, boundary_layer)
                u = u - v_r
                dxh = apply_a(xhs) + u + v_r
            else:
                dxh = apply_a(xhs) + u
            dx = apply_a(xs) + u + g
            return dx, dxh

        k1x, k1h = derivs(des[0], x, xhat)
        k2x, k2h = derivs(des[1], x + 0.5 * h * k1x, xhat + 0.5 * h * k1h)
        k3x, k3h = derivs(des[1], x + 0.5 * h * k2x, xhat + 0.5 * h * k2h)
        k4x, k4h = derivs(des[2], x + h * k3x, xhat + h * k3h)
        x_next = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        xhat_next = xhat + (h / 6.0) * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
        return x_next, xhat_next

    return step


def step_closed_loop(
    t: float,
    x: np.ndarray,
    xhat: np.ndarray,
    g: np.ndarray,
    region: Region,
    plan,
    path: MeasurementPath,
    drift: DriftModel,
    gains: Gains,
    h: float,
    boundary_layer: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """One RK4 step of the coupled plant/observer closed loop.

    The disturbance ``g`` and the feedback flag are held for the whole step;
    the desired trajectory, controller and sliding correction are evaluated
    at each stage.
    """
    return _make_stepper(drift, gains, boundary_layer)(t, x, xhat, g, region, plan, path, h)


class _Recorder:
    """Accumulates log rows and converts them to arrays at the end."""

    def __init__(self) -> None:
        self.rows: list[tuple] = []
        self.last_step = -1

    def add(self, k, t, x, xhat, xd, e1, e2, v, region, cycle, segment) -> None:
        if k == self.last_step:
            return
        self.last_step = k
        self.rows.append((t, *x, *xhat, *xd, *e1, *e2, v, int(region), cycle, segment))

    def finalize(self, **kwargs) -> SimLog:
        data = np.array(self.rows, dtype=float)
        if data.size == 0:
            data = np.empty((0, 20))
        return SimLog(
            t=data[:, 0],
            x=data[:, 1:4],
            xhat=data[:, 4:7],
            xd=data[:, 7:10],
            e1=data[:, 10:13],
            e2=data[:, 13:16],
            v=data[:, 16],
            region=data[:, 17].astype(int),
            cycle=data[:, 18].astype(int),
            segment=data[:, 19].astype(int),
            **kwargs,
        )


def run_episode(cfg: EpisodeConfig) -> SimLog:
    """Simulate one full episode until the path progress completes a turn.

    Raises :class:`SimulationFault` (with the partial log attached) on an
    error-energy ceiling violation, a non-finite state, a failed re-entry
    into the GPS disk, or when the cycle/wall-time guards trip.
    """
    cfg.validate()
    h = cfg.step
    geom = cfg.geometry
    bounds = cfg.bounds
    path = cfg.make_path()
    theta_initial = path.progress

    seq = np.random.SeedSequence(cfg.seed)
    dist_seq, meas_seq = seq.spawn(2)
    dist = DisturbanceModel(bound=cfg.dist_bound, rng=np.random.default_rng(dist_seq))
    meas_rng = np.random.default_rng(meas_seq)

    x = cfg.x0.copy()
    xhat = cfg.xhat0.copy()
    advance = _make_stepper(cfg.drift, cfg.gains, cfg.boundary_layer)

    every = max(1, round(1.0 / (h * cfg.output_rate)))
    rec = _Recorder()
    measurements: list[Measurement] = []
    cycle_records: list[CycleRecord] = []
    crossings: list[CrossingEvent] = []

    def snap_up(dt: float) -> int:
        return max(int(math.ceil(max(dt, cfg.min_gps_dwell) / h - 1e-9)), 1)

    def snap_down(dt: float) -> int:
        return int(math.floor(dt / h + 1e-9))

    # Initial feedback window: the desired trajectory starts at the initial
    # estimate (zero tracking error) and blends out to the boundary anchor
    # of the starting path angle.
    e1 = x - xhat
    v_now = lyapunov(e1, np.zeros(N_STATE))
    dt_a_steps = snap_up(min_dwell_available(v_now, bounds))
    plan: GpsPlan | SegmentPlan = GpsPlan(
        t_a=0.0,
        dt_a=dt_a_steps * h,
        origin=xhat.copy(),
        target=project_boundary(path_point(path, theta_initial), geom),
    )
    phase_end_step = dt_a_steps
    cycle = 0
    open_record = CycleRecord(cycle=0, t_a=0.0, dt_a=dt_a_steps * h, v_entry=v_now)

    latched_v = v_now
    last_meas_t: float | None = None
    max_v = 0.0
    completed = False
    progress = 0.0
    k = 0
    wall_start = time.monotonic()

    def fault(message: str) -> SimulationFault:
        cycle_records.append(open_record)
        log = rec.finalize(
            measurements=measurements,
            cycles=cycle_records,
            crossings=crossings,
            completed=False,
            progress=progress,
            max_v=max_v,
            duration=k * h,
        )
        return SimulationFault(message, log=log)

    while True:
        t = k * h

        # ----- phase transitions (windows are snapped to the step grid) -----
        if k == phase_end_step:
            if isinstance(plan, GpsPlan):
                v_exit = latched_v
                if v_exit > bounds.v_upper:
                    raise fault(
                        f"t={t:.3f}: error energy {v_exit:g} at the planned exit "
                        f"already exceeds V_u={bounds.v_upper:g}"
                    )
                dt_u_steps = snap_down(
                    cfg.safety_factor * max_dwell_denied(v_exit, bounds, cfg.dist_bound)
                )
                if dt_u_steps < 3:
                    raise fault(
                        f"t={t:.3f}: denied window of {dt_u_steps} steps is too "
                        "short to partition; check V_u and the disturbance bound"
                    )
                plan = build_segment_plan(
                    t_u=t,
                    dt_u=dt_u_steps * h,
                    weights=cfg.weights,
                    path=path,
                    theta_exit=path.progress,
                    geom=geom,
                    v_upper=bounds.v_upper,
                )
                phase_end_step = k + dt_u_steps
                last_meas_t = None
                open_record = CycleRecord(
                    cycle=open_record.cycle,
                    t_a=open_record.t_a,
                    dt_a=open_record.dt_a,
                    v_entry=open_record.v_entry,
                    t_u=t,
                    dt_u=dt_u_steps * h,
                    v_exit=v_exit,
                    partition_times=plan.partition_times,
                )
            else:
                if region_of(x[:2], geom) != Region.AVAILABLE:
                    raise fault(
                        f"t={t:.3f}: cushion failed, agent at {x[:2]} is still "
                        "outside the GPS disk at the end of the denied window"
                    )
                path.progress = plan.theta_ret
                des_here = desired_state(t, plan, path)
                v_entry = lyapunov(x - xhat, xhat - des_here.x)
                dt_a_steps = snap_up(min_dwell_available(v_entry, bounds))
                next_plan = GpsPlan(
                    t_a=t, dt_a=dt_a_steps * h, origin=plan.x_eps, target=plan.x_b_ret
                )
                cycle_records.append(open_record)
                cycle += 1
                open_record = CycleRecord(
                    cycle=cycle, t_a=t, dt_a=dt_a_steps * h, v_entry=v_entry
                )
                plan = next_plan
                phase_end_step = k + dt_a_steps
                if cycle > cfg.max_cycles:
                    raise fault(f"cycle guard tripped after {cfg.max_cycles} cycles")

        # ----- evaluate, log, measure, terminate -----
        region = region_of(x[:2], geom)
        des = desired_state(t, plan, path)
        e1 = x - xhat
        e2 = xhat - des.x
        v_now = lyapunov(e1, e2)
        if region == Region.AVAILABLE:
            latched_v = v_now
        if v_now > max_v:
            max_v = v_now

        if isinstance(plan, SegmentPlan):
            segment, _ = partition_rho(t, plan)
            if segment == 1:
                theta_now = plan.theta_exit
            elif segment == 2:
                theta_now = plan.theta_exit + plan.rate * (t - plan.partition_times[0])
            else:
                theta_now = plan.theta_ret
        else:
            segment = 0
            theta_now = path.progress
        progress = theta_now - theta_initial

        if k % every == 0:
            rec.add(k, t, x, xhat, des.x, e1, e2, v_now, region, open_record.cycle, segment)

        if v_now > bounds.v_upper + cfg.v_tolerance:
            rec.add(k, t, x, xhat, des.x, e1, e2, v_now, region, open_record.cycle, segment)
            raise fault(
                f"t={t:.3f}: error energy {v_now:g} exceeded the ceiling "
                f"V_u={bounds.v_upper:g} beyond tolerance {cfg.v_tolerance:g}"
            )

        if segment == 2 and (
            last_meas_t is None or t - last_meas_t >= cfg.measurement_period - 1e-9
        ):
            location = x[:2] if cfg.oracle_locations else xhat[:2]
            m = sample_measurement(
                cfg.field, x[:2], cfg.measurement_noise_std, meas_rng, timestamp=t
            )
            measurements.append(
                Measurement(
                    location=(float(location[0]), float(location[1])),
                    value=m.value,
                    timestamp=t,
                )
            )
            last_meas_t = t

        if progress >= 2.0 * math.pi - 1e-12:
            rec.add(k, t, x, xhat, des.x, e1, e2, v_now, region, open_record.cycle, segment)
            completed = True
            break

        # ----- integrate one step -----
        g = dist.sample()
        x_prev = x
        x, xhat = advance(t, x, xhat, g, region, plan, path, h)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xhat))):
            raise fault(f"t={t:.3f}: non-finite state (x={x}, xhat={xhat})")
        s = detect_crossing(x_prev[:2], x[:2], geom)
        if s is not None:
            direction = "entry" if region_of(x[:2], geom) == Region.AVAILABLE else "exit"
            crossings.append(CrossingEvent(t=t + s * h, direction=direction))
        k += 1
        if k % 4096 == 0 and time.monotonic() - wall_start > cfg.max_wall_time:
            raise fault(f"wall-time guard tripped after {cfg.max_wall_time:g} s")

    cycle_records.append(open_record)
    return rec.finalize(
        measurements=measurements,
        cycles=cycle_records,
        crossings=crossings,
        completed=completed,
        progress=progress,
        max_v=max_v,
        duration=k * h,
    )


def domain_grid(field: ScalarField, resolution: int) -> np.ndarray:
    """Uniform ``resolution x resolution`` grid over the field domain."""
    xmin, xmax, ymin, ymax = field.domain_bounds
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def fit_and_evaluate(
    log: SimLog,
    cfg: EpisodeConfig,
    grid_resolution: int | None = None,
    stride: int | None = None,
) -> list[RmsePoint]:
    """RMSE of GP fits on growing measurement prefixes, against ground truth.

    Also attaches the full-prefix model and the curve to ``log``.
    """
    if not log.measurements:
        raise ValueError("no measurements in the log; cannot fit a field model")
    resolution = cfg.grid_resolution if grid_resolution is None else grid_resolution
    step = cfg.rmse_stride if stride is None else stride
    grid = domain_grid(cfg.field, resolution)
    truth = eval_field_grid(cfg.field, grid)

    locations = np.array([m.location for m in log.measurements])
    values = np.array([m.value for m in log.measurements])
    total = len(values)
    prefixes = list(range(step, total + 1, step))
    if not prefixes or prefixes[-1] != total:
        prefixes.append(total)

    hyper = cfg.gp_hyper
    curve: list[RmsePoint] = []
    model: FieldGP | None = None
    for m_count in prefixes:
        model = FieldGP(
            amplitude=hyper.amplitude,
            length_scale=hyper.length_scale,
            noise_std=hyper.noise_std,
            jitter=hyper.jitter,
        ).fit(locations[:m_count], values[:m_count])
        result = evaluate_rmse(model, grid, truth)
        curve.append(RmsePoint(m=m_count, rmse=result.rmse, normalized=result.normalized))

    log.gp_model = model
    log.rmse_curve = curve
    return curve
