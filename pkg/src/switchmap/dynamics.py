"""Ground-truth plant: linear drift, bounded disturbance, fixed-step RK4.

State is a flat 3-vector (planar position plus heading).  The drift is
``A @ x``; the disturbance is a random direction with magnitude uniform on
``(0, bound]``, redrawn once per integration step and held constant across
the step (zero-order hold), which keeps the ODE right-hand side well defined
and runs reproducibly from a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AgentState",
    "DriftModel",
    "DisturbanceModel",
    "drift",
    "sample_disturbance",
    "rk4_step",
    "step_truth",
    "IntegrationError",
]

N_STATE = 3


class IntegrationError(RuntimeError):
    """Raised when integration produces a non-finite state."""


@dataclass(frozen=True)
class AgentState:
    """Plant state (position x, position y, heading) at time ``t``."""

    x: np.ndarray
    t: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.x.shape != (N_STATE,):
            raise ValueError(f"state must have shape ({N_STATE},), got {self.x.shape}")
        if not np.all(np.isfinite(self.x)):
            raise ValueError(f"state contains non-finite entries: {self.x}")


@dataclass(frozen=True)
class DriftModel:
    """Linear known drift ``f(t, x) = A @ x``.

    The Lipschitz constant equals the spectral norm of ``A`` and is exposed
    for the dwell-time computation.  ``scalar`` is set when ``A`` is a
    multiple of the identity, enabling a cheaper code path in the simulator.
    """

    a_matrix: np.ndarray
    scalar: float | None = field(init=False, default=None)

    def __post_init__(self) -> None:
        a = np.asarray(self.a_matrix, dtype=float)
        if a.shape != (N_STATE, N_STATE):
            raise ValueError(f"A must be {N_STATE}x{N_STATE}, got {a.shape}")
        object.__setattr__(self, "a_matrix", a)
        if np.allclose(a, a[0, 0] * np.eye(N_STATE), rtol=0.0, atol=0.0):
            object.__setattr__(self, "scalar", float(a[0, 0]))

    @property
    def lipschitz_const(self) -> float:
        return float(np.linalg.norm(self.a_matrix, 2))


def drift(model: DriftModel, t: float, x: np.ndarray) -> np.ndarray:
    """Known drift term; exactly zero at the origin."""
    return model.a_matrix @ x


@dataclass
class DisturbanceModel:
    """Bounded unmodeled dynamics with a seeded stream.

    Every sample has 2-norm in ``(0, bound]``: uniform direction on the unit
    sphere and magnitude uniform on ``(0, bound]``.  ``bound = 0`` disables
    the disturbance (samples are exactly zero), which the simulator uses for
    exact-tracking checks.
    """

    bound: float
    rng: np.random.Generator

    def __post_init__(self) -> None:
        if self.bound < 0:
            raise ValueError(f"disturbance bound must be >= 0, got {self.bound}")

    def sample(self) -> np.ndarray:
        return sample_disturbance(self)


def sample_disturbance(model: DisturbanceModel) -> np.ndarray:
    """One disturbance vector; mutates the model's random stream."""
    if model.bound == 0.0:
        return np.zeros(N_STATE)
    direction = model.rng.standard_normal(N_STATE)
    norm = np.linalg.norm(direction)
    while norm == 0.0:  # probability-zero guard
        direction = model.rng.standard_normal(N_STATE)
        norm = np.linalg.norm(direction)
    # 1 - U maps [0, 1) to (0, 1], keeping the magnitude strictly positive
    magnitude = model.bound * (1.0 - model.rng.random())
    return (magnitude / norm) * direction


def rk4_step(f, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of ``dy/dt = f(t, y)``."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_truth(
    state: AgentState,
    u: np.ndarray,
    model: DriftModel,
    dist: DisturbanceModel,
    h: float,
) -> AgentState:
    """Advance the plant by one step with ``u`` and the disturbance held constant."""
    if h <= 0:
        raise ValueError(f"step size must be > 0, got {h}")
    u = np.asarray(u, dtype=float)
    g = dist.sample()
    a = model.a_matrix

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        return a @ x + u + g

    x_next = rk4_step(rhs, state.t, state.x, h)
    if not np.all(np.isfinite(x_next)):
        raise IntegrationError(
            f"non-finite state after step: t={state.t:.6f}, x={state.x}, u={u}, g={g}"
        )
    return AgentState(x=x_next, t=state.t + h)
