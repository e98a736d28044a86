"""Switched GPS-available/GPS-denied navigation with GP scalar field mapping.

A deterministic simulator and library for an agent that alternates between a
GPS disk (full state feedback) and its feedback-denied complement under
Lyapunov-derived dwell-time limits, follows a smootherstep-stitched switching
trajectory to a circular measurement path, and reconstructs the unknown
scalar field from the collected measurements with a squared-exponential
Gaussian process.
"""

__version__ = "0.1.0"

from .dwell import (
    DwellSchedule,
    LyapunovBounds,
    Region,
    RegionGeometry,
    SchedulingError,
    decay_envelope,
    detect_crossing,
    growth_envelope,
    max_dwell_denied,
    min_dwell_available,
    region_of,
)
from .dynamics import AgentState, DisturbanceModel, DriftModel, drift, sample_disturbance, step_truth
from .engine import (
    CycleRecord,
    EpisodeConfig,
    RmsePoint,
    SimLog,
    SimulationFault,
    fit_and_evaluate,
    run_episode,
    step_closed_loop,
)
from .field import FieldSource, Measurement, ScalarField, eval_field, sample_measurement
from .gp import FieldGP, GPFitError, GPHyperparams, GPPrediction, evaluate_rmse, kernel
from .observer import Gains, ObserverState, control, lyapunov, observer_step, sliding_term
from .trajectory import (
    DesiredState,
    GpsPlan,
    MeasurementPath,
    SegmentPlan,
    build_segment_plan,
    cushion_point,
    desired_state,
    interpolate,
    partition_rho,
    project_boundary,
    smoother_step,
    smoother_step_deriv,
)

__all__ = [
    "__version__",
    "AgentState",
    "CycleRecord",
    "DesiredState",
    "DisturbanceModel",
    "DriftModel",
    "DwellSchedule",
    "EpisodeConfig",
    "FieldGP",
    "FieldSource",
    "Gains",
    "GPFitError",
    "GPHyperparams",
    "GPPrediction",
    "GpsPlan",
    "LyapunovBounds",
    "Measurement",
    "MeasurementPath",
    "ObserverState",
    "Region",
    "RegionGeometry",
    "RmsePoint",
    "ScalarField",
    "SchedulingError",
    "SegmentPlan",
    "SimLog",
    "SimulationFault",
    "build_segment_plan",
    "control",
    "cushion_point",
    "decay_envelope",
    "desired_state",
    "detect_crossing",
    "drift",
    "eval_field",
    "evaluate_rmse",
    "fit_and_evaluate",
    "growth_envelope",
    "interpolate",
    "kernel",
    "lyapunov",
    "max_dwell_denied",
    "min_dwell_available",
    "observer_step",
    "partition_rho",
    "project_boundary",
    "region_of",
    "run_episode",
    "sample_disturbance",
    "sample_measurement",
    "sliding_term",
    "smoother_step",
    "smoother_step_deriv",
    "step_closed_loop",
    "step_truth",
]
