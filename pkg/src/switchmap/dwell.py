"""Dwell-time bounds, region membership and Lyapunov growth/decay envelopes.

The GPS-available region is the closed disk of ``gps_radius`` around
``gps_center``; its complement within the domain is GPS-denied.  From the
error-energy value ``V`` at a region transition, the supervisor computes

* a minimum time to stay with feedback, ``-(1/lambda_a) * ln(min(V_l/V, 1))``,
  driving ``V`` down to at least ``V_l``; and
* a maximum time to stay without feedback,
  ``(1/lambda_u) * ln((V_u + c) / (V + c))`` with ``c = bound^2 / (2 lambda_u)``,
  which keeps the growth envelope below ``V_u``.

``lambda_a = 2 * min(min_eig(k1) - L_f, min_eig(k2))`` and
``lambda_u = 2 * L_f + 1`` come from the stability analysis of the switched
error dynamics and are derived from the configured gains.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Region",
    "RegionGeometry",
    "LyapunovBounds",
    "DwellSchedule",
    "SchedulingError",
    "region_of",
    "detect_crossing",
    "min_dwell_available",
    "max_dwell_denied",
    "growth_envelope",
    "decay_envelope",
]


class SchedulingError(RuntimeError):
    """Raised when the dwell schedule preconditions are violated."""


class Region(enum.IntEnum):
    """Feedback availability flag; serialized as 0/1 in logs."""

    DENIED = 0
    AVAILABLE = 1


@dataclass(frozen=True)
class RegionGeometry:
    """Closed GPS disk; everything else in the domain is GPS-denied."""

    gps_center: tuple[float, float] = (0.0, 0.0)
    gps_radius: float = 1.0

    def __post_init__(self) -> None:
        if self.gps_radius <= 0:
            raise ValueError(f"gps_radius must be > 0, got {self.gps_radius}")


@dataclass(frozen=True)
class LyapunovBounds:
    """User error-energy bounds plus the derived envelope rates."""

    v_lower: float
    v_upper: float
    lambda_a: float
    lambda_u: float

    def __post_init__(self) -> None:
        if not (0 < self.v_lower < self.v_upper):
            raise ValueError(
                f"need 0 < V_l < V_u, got V_l={self.v_lower}, V_u={self.v_upper}"
            )
        if self.lambda_a <= 0:
            raise ValueError(f"lambda_a must be > 0, got {self.lambda_a}")
        if self.lambda_u <= 0:
            raise ValueError(f"lambda_u must be > 0, got {self.lambda_u}")

    @staticmethod
    def from_gains(v_lower: float, v_upper: float, k1: np.ndarray, k2: np.ndarray,
                   lipschitz_const: float) -> "LyapunovBounds":
        """Derive the envelope rates from the gain matrices and drift constant."""
        eig1 = float(np.linalg.eigvalsh(np.asarray(k1, dtype=float)).min())
        eig2 = float(np.linalg.eigvalsh(np.asarray(k2, dtype=float)).min())
        lambda_a = 2.0 * min(eig1 - lipschitz_const, eig2)
        if lambda_a <= 0:
            raise ValueError(
                "observer gain too small: min eigenvalue of k1 "
                f"({eig1:g}) must exceed the drift Lipschitz constant ({lipschitz_const:g})"
            )
        lambda_u = 2.0 * lipschitz_const + 1.0
        return LyapunovBounds(v_lower=v_lower, v_upper=v_upper,
                              lambda_a=lambda_a, lambda_u=lambda_u)


@dataclass(frozen=True)
class DwellSchedule:
    """Per-cycle switching record: entry times, dwell lengths, partitions."""

    cycle_index: int
    t_a: float
    t_u: float
    dt_a: float
    dt_u: float
    partition_times: tuple[float, float, float]

    def __post_init__(self) -> None:
        times = (self.t_u, *self.partition_times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"partition times must be strictly increasing, got {times}")


def region_of(p, geom: RegionGeometry) -> Region:
    """Membership of a planar point; the boundary counts as available."""
    dx = float(p[0]) - geom.gps_center[0]
    dy = float(p[1]) - geom.gps_center[1]
    if math.hypot(dx, dy) <= geom.gps_radius:
        return Region.AVAILABLE
    return Region.DENIED


def detect_crossing(prev, nxt, geom: RegionGeometry) -> float | None:
    """Fraction ``s`` along ``prev -> nxt`` where the boundary is crossed.

    Returns None when both endpoints share a region (tangent grazing does not
    count as a crossing under the closed-disk convention).  The crossing point
    is resolved by bisection to a radial error below 1e-9.
    """
    if region_of(prev, geom) == region_of(nxt, geom):
        return None
    cx, cy = geom.gps_center
    px, py = float(prev[0]), float(prev[1])
    qx, qy = float(nxt[0]), float(nxt[1])

    def radial_error(s: float) -> float:
        x = px + s * (qx - px) - cx
        y = py + s * (qy - py) - cy
        return math.hypot(x, y) - geom.gps_radius

    lo, hi = 0.0, 1.0
    f_lo = radial_error(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = radial_error(mid)
        if abs(f_mid) < 1e-9:
            return mid
        if (f_lo < 0) == (f_mid < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def min_dwell_available(v_entry: float, bounds: LyapunovBounds) -> float:
    """Minimum feedback dwell that drives the decay envelope down to ``V_l``.

    The ``min(., 1)`` clamp makes the result zero whenever the entry value is
    already at or below ``V_l`` (including ``v_entry = 0``).
    """
    if v_entry < 0:
        raise ValueError(f"v_entry must be >= 0, got {v_entry}")
    if v_entry <= bounds.v_lower:
        return 0.0
    return -math.log(bounds.v_lower / v_entry) / bounds.lambda_a


def max_dwell_denied(v_exit: float, bounds: LyapunovBounds, dist_bound: float) -> float:
    """Maximum feedback-free dwell keeping the growth envelope at or below ``V_u``."""
    if v_exit < 0:
        raise ValueError(f"v_exit must be >= 0, got {v_exit}")
    if v_exit > bounds.v_upper:
        raise SchedulingError(
            f"error energy at exit ({v_exit:g}) already exceeds the ceiling "
            f"V_u={bounds.v_upper:g}"
        )
    c = dist_bound**2 / (2.0 * bounds.lambda_u)
    return math.log((bounds.v_upper + c) / (v_exit + c)) / bounds.lambda_u


def growth_envelope(v_start: float, dt: float, bounds: LyapunovBounds,
                    dist_bound: float) -> float:
    """Upper bound on ``V`` after ``dt`` seconds without feedback."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    c = dist_bound**2 / (2.0 * bounds.lambda_u)
    e = math.exp(bounds.lambda_u * dt)
    return v_start * e + c * (e - 1.0)


def decay_envelope(v_start: float, dt: float, bounds: LyapunovBounds) -> float:
    """Upper bound on ``V`` after ``dt`` seconds with feedback active."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    return v_start * math.exp(-bounds.lambda_a * dt)
