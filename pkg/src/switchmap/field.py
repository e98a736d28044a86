"""Ground-truth scalar field built from Gaussian-decay sources.

The field value at a planar point is the sum of per-source contributions
``I_i * exp(-gamma * ||p - p_i||^2)`` with a single decay constant shared by
all sources.  Point measurements add zero-mean Gaussian noise drawn from a
caller-supplied seeded generator, so identical seeds reproduce identical
measurement streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FieldSource",
    "ScalarField",
    "Measurement",
    "eval_field",
    "eval_field_grid",
    "sample_measurement",
]


@dataclass(frozen=True)
class FieldSource:
    """One field source: position, peak intensity and shared decay constant."""

    position: tuple[float, float]
    intensity: float
    decay: float

    def __post_init__(self) -> None:
        if self.intensity < 0:
            raise ValueError(f"source intensity must be >= 0, got {self.intensity}")
        if self.decay <= 0:
            raise ValueError(f"source decay must be > 0, got {self.decay}")


@dataclass(frozen=True)
class ScalarField:
    """Sum-of-sources scalar field over an axis-aligned planar domain.

    Parameters
    ----------
    sources : tuple of FieldSource
        At least one source; all sources must share the same decay constant.
    domain_bounds : (xmin, xmax, ymin, ymax)
        Well-ordered box used for grid exports; evaluation itself is global.
    """

    sources: tuple[FieldSource, ...]
    domain_bounds: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if not self.sources:
            raise ValueError("field needs at least one source")
        decays = {s.decay for s in self.sources}
        if len(decays) > 1:
            raise ValueError("per-source decay is not supported; all sources share one decay")
        xmin, xmax, ymin, ymax = self.domain_bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValueError(f"domain bounds must be well-ordered, got {self.domain_bounds}")


@dataclass(frozen=True)
class Measurement:
    """A noisy point measurement: where it was recorded, its value and time."""

    location: tuple[float, float]
    value: float
    timestamp: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError(f"measurement value must be finite, got {self.value}")


def eval_field(field: ScalarField, p) -> float:
    """Evaluate the field at a single point.

    Pure and total on finite inputs; points outside ``domain_bounds`` are
    allowed because the formula is globally defined.
    """
    px, py = float(p[0]), float(p[1])
    total = 0.0
    for s in field.sources:
        dx = px - s.position[0]
        dy = py - s.position[1]
        total += s.intensity * math.exp(-s.decay * (dx * dx + dy * dy))
    return total


def eval_field_grid(field: ScalarField, points: np.ndarray) -> np.ndarray:
    """Vectorized field evaluation for an ``(n, 2)`` array of points."""
    pts = np.asarray(points, dtype=float)
    values = np.zeros(pts.shape[0])
    for s in field.sources:
        d2 = (pts[:, 0] - s.position[0]) ** 2 + (pts[:, 1] - s.position[1]) ** 2
        values += s.intensity * np.exp(-s.decay * d2)
    return values


def sample_measurement(
    field: ScalarField,
    p,
    noise_std: float,
    rng: np.random.Generator,
    timestamp: float = 0.0,
) -> Measurement:
    """Draw one noisy measurement of the field at ``p``.

    The noise is N(0, noise_std^2) from ``rng``; the generator state advances
    on every call, so calls must be serialized per stream.  ``noise_std = 0``
    reduces to exact field evaluation.
    """
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    value = eval_field(field, p)
    if noise_std > 0:
        value += noise_std * rng.standard_normal()
    return Measurement(location=(float(p[0]), float(p[1])), value=value, timestamp=timestamp)
