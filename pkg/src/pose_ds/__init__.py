"""Learn a globally stable 6-DoF pose dynamical system from one demonstration.

A demonstrated pose trajectory is warped onto a trivially stable latent
system through two maps: an orientation-only map from an identity
trajectory onto a latent geodesic, and a fitted position/orientation
map from the latent trajectory onto the demonstration. Rollouts inherit
the demo's shape while provably converging to the goal pose from any
start, under perturbations and moving goals.
"""

from . import quat
from .demo import (
    DemoTrajectory,
    Pose,
    load_demo,
    make_identity_traj,
    make_latent_line,
    normalize_to_goal_frame,
    resample_arclength,
    save_demo,
)
from .diffeo import (
    LwtLayer,
    OrientationField,
    PoseDiffeo,
    PositionDiffeo,
    fit_orientation_field,
    fit_position_diffeo,
    grid_distortion_export,
)
from .ds import (
    BuildParams,
    CoupledDSModel,
    RolloutOptions,
    RolloutResult,
    angular_velocity,
    build_model,
    goal_frame_transform,
    goal_frame_apply,
    latent_linear_velocity,
    load_model,
    lyapunov_values,
    pushforward_to_task,
    rollout,
    save_model,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "quat",
    "Pose",
    "DemoTrajectory",
    "load_demo",
    "save_demo",
    "normalize_to_goal_frame",
    "make_latent_line",
    "make_identity_traj",
    "resample_arclength",
    "LwtLayer",
    "PositionDiffeo",
    "OrientationField",
    "PoseDiffeo",
    "fit_position_diffeo",
    "fit_orientation_field",
    "grid_distortion_export",
    "BuildParams",
    "CoupledDSModel",
    "build_model",
    "latent_linear_velocity",
    "angular_velocity",
    "step",
    "rollout",
    "RolloutOptions",
    "RolloutResult",
    "pushforward_to_task",
    "goal_frame_transform",
    "goal_frame_apply",
    "lyapunov_values",
    "save_model",
    "load_model",
    "__version__",
]
