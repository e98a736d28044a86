"""Switched state observer, sliding-mode correction and tracking controller.

With feedback available the observer adds the sliding correction
``v_r = k1 @ e1 + bound * sgn(e1)`` that dominates the bounded disturbance;
without feedback it runs open loop.  The controller
``u = xd_dot - f(t, xhat) - k2 @ e2 [- v_r]`` cancels the drift and the
observer correction so the tracking error obeys ``e2' = -k2 @ e2`` exactly in
both regions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dwell import Region
from .dynamics import N_STATE, DriftModel, IntegrationError, rk4_step

__all__ = [
    "Gains",
    "ObserverState",
    "sgn",
    "sliding_term",
    "control",
    "observer_step",
    "lyapunov",
]


@dataclass(frozen=True)
class Gains:
    """Positive definite observer/tracking gains and the disturbance bound."""

    k1: np.ndarray
    k2: np.ndarray
    dist_bound: float

    def __post_init__(self) -> None:
        for name in ("k1", "k2"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (N_STATE, N_STATE):
                raise ValueError(f"{name} must be {N_STATE}x{N_STATE}, got {m.shape}")
            object.__setattr__(self, name, m)
        if self.dist_bound < 0:
            raise ValueError(f"dist_bound must be >= 0, got {self.dist_bound}")

    def validate(self, lipschitz_const: float) -> None:
        """Reject gains that cannot produce a positive decay rate."""
        eig1 = float(np.linalg.eigvalsh(self.k1).min())
        eig2 = float(np.linalg.eigvalsh(self.k2).min())
        if eig1 <= lipschitz_const:
            raise ValueError(
                f"min eigenvalue of k1 ({eig1:g}) must exceed the drift "
                f"Lipschitz constant ({lipschitz_const:g})"
            )
        if eig2 <= 0:
            raise ValueError(f"k2 must be positive definite, min eigenvalue {eig2:g}")


@dataclass(frozen=True)
class ObserverState:
    """Estimate plus the two error signals it induces.

    ``e2 = xhat - xd`` is defined at all times; ``e1 = x - xhat`` is only
    meaningful while the agent has feedback (the simulator logs it globally
    for verification).
    """

    xhat: np.ndarray
    e1: np.ndarray
    e2: np.ndarray


def sgn(v: np.ndarray, boundary_layer: float = 0.0) -> np.ndarray:
    """Component-wise sign with sgn(0) = 0.

    A positive ``boundary_layer`` switches to ``tanh(v / width)`` smoothing,
    an off-by-default option for experiments with coarse steps where the
    exact sign chatters.
    """
    if boundary_layer > 0.0:
        return np.tanh(v / boundary_layer)
    return np.sign(v)


def sliding_term(e1: np.ndarray, gains: Gains, boundary_layer: float = 0.0) -> np.ndarray:
    """High-frequency correction ``k1 @ e1 + bound * sgn(e1)``."""
    return gains.k1 @ e1 + gains.dist_bound * sgn(e1, boundary_layer)


def control(
    xhat: np.ndarray,
    xd: np.ndarray,
    xd_dot: np.ndarray,
    region: Region,
    model: DriftModel,
    gains: Gains,
    v_r: np.ndarray | None = None,
) -> np.ndarray:
    """Stabilizing input; ``v_r`` is subtracted only with feedback available."""
    e2 = xhat - xd
    u = xd_dot - model.a_matrix @ xhat - gains.k2 @ e2
    if region == Region.AVAILABLE:
        if v_r is None:
            raise ValueError("v_r is required when feedback is available")
        u = u - v_r
    return u


def observer_step(
    obs: ObserverState,
    u: np.ndarray,
    region: Region,
    model: DriftModel,
    gains: Gains,
    h: float,
    boundary_layer: float = 0.0,
) -> np.ndarray:
    """Advance the estimate one step with ``u`` (and ``v_r``) held constant.

    With feedback, ``e1`` must have been refreshed from the true state for
    this step.  Returns the new estimate; the caller rebuilds the error pair.
    """
    if h <= 0:
        raise ValueError(f"step size must be > 0, got {h}")
    correction = np.zeros(N_STATE)
    if region == Region.AVAILABLE:
        correction = sliding_term(obs.e1, gains, boundary_layer)
    a = model.a_matrix

    def rhs(t: float, xhat: np.ndarray) -> np.ndarray:
        return a @ xhat + u + correction

    xhat_next = rk4_step(rhs, 0.0, obs.xhat, h)
    if not np.all(np.isfinite(xhat_next)):
        raise IntegrationError(f"non-finite estimate after step: xhat={obs.xhat}, u={u}")
    return xhat_next


def lyapunov(e1: np.ndarray, e2: np.ndarray) -> float:
    """Error energy ``0.5 ||e1||^2 + 0.5 ||e2||^2``."""
    return 0.5 * float(e1 @ e1) + 0.5 * float(e2 @ e2)
