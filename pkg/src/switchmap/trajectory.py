"""Switching trajectory: blended excursions between the GPS disk and the path.

Each cycle of the desired trajectory has four windows.  A feedback window
blends from the cushion anchor back out to a boundary anchor; the following
feedback-free window is partitioned by weights ``(w0, w1, w2)`` into three
segments:

1. depart the boundary anchor and land on the measurement path,
2. advance along the path collecting measurements,
3. leave the path for the cushion anchor just inside the GPS disk.

Blends use the quintic smootherstep ``S(rho) = 6 rho^5 - 15 rho^4 + 10 rho^3``
whose first and second derivatives vanish at both endpoints, so positions are
continuous everywhere and velocities are continuous wherever the blend
anchors are frozen.  Path progress only advances during segment 2; all
anchors are frozen at their window-entry values, which makes the analytic
time derivative exact.

The cushion anchor sits ``2 * sqrt(V_u)`` inside the boundary along the
inward radial direction: even under the worst tracking error compatible with
the error-energy ceiling ``V_u``, the agent is guaranteed to regain feedback
before the window ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dwell import RegionGeometry, SchedulingError

__all__ = [
    "MeasurementPath",
    "SegmentPlan",
    "GpsPlan",
    "DesiredState",
    "smoother_step",
    "smoother_step_deriv",
    "path_point",
    "path_velocity",
    "project_boundary",
    "interpolate",
    "cushion_point",
    "partition_rho",
    "build_segment_plan",
    "desired_state",
]

_EDGE_TOL = 1e-9


def smoother_step(rho: float) -> float:
    """Quintic blend value; the argument is clamped to [0, 1] first."""
    r = min(max(rho, 0.0), 1.0)
    return r * r * r * (r * (6.0 * r - 15.0) + 10.0)


def smoother_step_deriv(rho: float) -> float:
    """Derivative ``30 rho^4 - 60 rho^3 + 30 rho^2`` of the clamped blend."""
    if rho <= 0.0 or rho >= 1.0:
        return 0.0
    return 30.0 * rho * rho * (rho - 1.0) * (rho - 1.0)


@dataclass
class MeasurementPath:
    """Circular measurement path with persistent angular progress.

    ``progress`` is the current path angle; it only advances during segment 2
    and the simulator owns the mutation.  A path point at angle ``theta`` is
    ``center + radius * (cos, sin)(theta)`` with heading ``theta + pi/2``
    (the tangent direction).
    """

    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 2.0
    nominal_rate: float = 0.25
    progress: float = 0.0

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"path radius must be > 0, got {self.radius}")
        if self.nominal_rate <= 0:
            raise ValueError(f"nominal_rate must be > 0, got {self.nominal_rate}")


def path_point(path: MeasurementPath, theta: float) -> np.ndarray:
    """Position and tangent heading on the path at angle ``theta``."""
    return np.array([
        path.center[0] + path.radius * math.cos(theta),
        path.center[1] + path.radius * math.sin(theta),
        theta + 0.5 * math.pi,
    ])


def path_velocity(path: MeasurementPath, theta: float, rate: float | None = None) -> np.ndarray:
    """Time derivative of the path point when ``theta`` advances at ``rate``."""
    w = path.nominal_rate if rate is None else rate
    return np.array([
        -path.radius * w * math.sin(theta),
        path.radius * w * math.cos(theta),
        w,
    ])


def project_boundary(point: np.ndarray, geom: RegionGeometry) -> np.ndarray:
    """Radial projection of a path point onto the GPS boundary circle.

    The heading component is copied unchanged.  The point must not coincide
    with the disk center (the projection is undefined there).
    """
    dx = point[0] - geom.gps_center[0]
    dy = point[1] - geom.gps_center[1]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        raise ValueError("boundary projection undefined for the disk center")
    scale = geom.gps_radius / dist
    return np.array([
        geom.gps_center[0] + scale * dx,
        geom.gps_center[1] + scale * dy,
        point[2],
    ])


def interpolate(s: float, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Convex combination ``s * q + (1 - s) * r``."""
    return s * q + (1.0 - s) * r


def cushion_point(x_b: np.ndarray, geom: RegionGeometry, v_upper: float) -> np.ndarray:
    """Anchor displaced ``2 sqrt(V_u)`` radially inward from a boundary point.

    The displacement magnitude must be smaller than the GPS radius, otherwise
    the cushion would reach past the disk center.
    """
    depth = 2.0 * math.sqrt(v_upper)
    if depth >= geom.gps_radius:
        raise ValueError(
            f"cushion depth 2*sqrt(V_u) = {depth:g} must be smaller than the "
            f"GPS radius {geom.gps_radius:g}"
        )
    dx = geom.gps_center[0] - x_b[0]
    dy = geom.gps_center[1] - x_b[1]
    dist = math.hypot(dx, dy)
    return np.array([
        x_b[0] + depth * dx / dist,
        x_b[1] + depth * dy / dist,
        x_b[2],
    ])


@dataclass(frozen=True)
class SegmentPlan:
    """One feedback-free window with its partition and frozen anchors.

    ``x_b`` anchors segment 1 (the exit point on the boundary), ``x_b_ret``
    is the boundary anchor the agent will return through, and ``x_eps`` is
    the cushion anchor inside the disk.  Path progress runs from
    ``theta_exit`` to ``theta_ret`` during segment 2 at ``rate``.
    """

    t_u: float
    dt_u: float
    weights: tuple[float, float, float]
    theta_exit: float
    theta_ret: float
    rate: float
    x_b: np.ndarray
    x_b_ret: np.ndarray
    x_eps: np.ndarray

    def __post_init__(self) -> None:
        if self.dt_u <= 0:
            raise ValueError(f"dt_u must be > 0, got {self.dt_u}")
        w = self.weights
        if len(w) != 3 or any(wj <= 0 or wj >= 1 for wj in w):
            raise ValueError(f"weights must lie strictly inside (0, 1), got {w}")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got sum={sum(w)!r}")

    @property
    def partition_times(self) -> tuple[float, float, float]:
        w0, w1, _ = self.weights
        t1 = self.t_u + w0 * self.dt_u
        t2 = t1 + w1 * self.dt_u
        return (t1, t2, self.t_u + self.dt_u)


@dataclass(frozen=True)
class GpsPlan:
    """One feedback window blending from ``origin`` back out to ``target``."""

    t_a: float
    dt_a: float
    origin: np.ndarray
    target: np.ndarray

    def __post_init__(self) -> None:
        if self.dt_a <= 0:
            raise ValueError(f"dt_a must be > 0, got {self.dt_a}")


@dataclass(frozen=True)
class DesiredState:
    """Desired trajectory value and its analytic time derivative."""

    x: np.ndarray
    xdot: np.ndarray


def build_segment_plan(
    t_u: float,
    dt_u: float,
    weights: tuple[float, float, float],
    path: MeasurementPath,
    theta_exit: float,
    geom: RegionGeometry,
    v_upper: float,
) -> SegmentPlan:
    """Freeze the anchors for one feedback-free window starting at ``t_u``."""
    theta_ret = theta_exit + path.nominal_rate * weights[1] * dt_u
    x_b = project_boundary(path_point(path, theta_exit), geom)
    x_b_ret = project_boundary(path_point(path, theta_ret), geom)
    x_eps = cushion_point(x_b_ret, geom, v_upper)
    return SegmentPlan(
        t_u=t_u,
        dt_u=dt_u,
        weights=tuple(weights),
        theta_exit=theta_exit,
        theta_ret=theta_ret,
        rate=path.nominal_rate,
        x_b=x_b,
        x_b_ret=x_b_ret,
        x_eps=x_eps,
    )


def partition_rho(t: float, plan: SegmentPlan) -> tuple[int, float]:
    """Active segment index (1..3) and its local normalized time.

    Segment ``j`` spans a ``w_{j-1}`` fraction of the window; a partition
    boundary belongs to the incoming segment.
    """
    t1, t2, t3 = plan.partition_times
    tol = _EDGE_TOL * max(1.0, abs(plan.t_u), abs(t3))
    if t < plan.t_u - tol or t > t3 + tol:
        raise SchedulingError(
            f"time {t:g} outside the window [{plan.t_u:g}, {t3:g}]"
        )
    w0, w1, w2 = plan.weights
    if t < t1:
        seg, start, dur = 1, plan.t_u, w0 * plan.dt_u
    elif t < t2:
        seg, start, dur = 2, t1, w1 * plan.dt_u
    else:
        seg, start, dur = 3, t2, w2 * plan.dt_u
    rho = (t - start) / dur
    return seg, min(max(rho, 0.0), 1.0)


def _blend(rho: float, duration: float, q: np.ndarray, r: np.ndarray) -> DesiredState:
    s = smoother_step(rho)
    ds = smoother_step_deriv(rho) / duration
    return DesiredState(x=interpolate(s, q, r), xdot=ds * (q - r))


def desired_state(t: float, plan, path: MeasurementPath) -> DesiredState:
    """Evaluate the switching trajectory and its derivative at time ``t``.

    Accepts either plan type.  Values are continuous across every window and
    segment boundary because adjacent pieces share their frozen anchors.
    """
    if isinstance(plan, GpsPlan):
        rho = (t - plan.t_a) / plan.dt_a
        tol = _EDGE_TOL * max(1.0, abs(plan.t_a))
        if t < plan.t_a - tol or t > plan.t_a + plan.dt_a + tol:
            raise SchedulingError(
                f"time {t:g} outside the window [{plan.t_a:g}, {plan.t_a + plan.dt_a:g}]"
            )
        return _blend(min(max(rho, 0.0), 1.0), plan.dt_a, plan.target, plan.origin)

    seg, rho = partition_rho(t, plan)
    w0, w1, w2 = plan.weights
    if seg == 1:
        return _blend(rho, w0 * plan.dt_u, path_point(path, plan.theta_exit), plan.x_b)
    if seg == 2:
        theta = plan.theta_exit + plan.rate * rho * w1 * plan.dt_u
        return DesiredState(
            x=path_point(path, theta),
            xdot=path_velocity(path, theta, rate=plan.rate),
        )
    return _blend(rho, w2 * plan.dt_u, plan.x_eps, path_point(path, plan.theta_ret))
