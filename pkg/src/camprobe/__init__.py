"""Camera-control probing toolkit.

Builds per-frame displacement fields from depth and camera trajectories,
applies them inside a toy rectified-flow denoising loop via differentiable
resampling, and evaluates camera control with pose, leakage, bias and
multi-view consistency metrics against a built-in synthetic-scene oracle.
"""

__version__ = "0.1.0"

from .diffusion import (
    Schedule,
    ToyDenoiser,
    UpdateConfig,
    guided_update,
    linear_schedule,
    predict_z0,
    reimpose_noise,
    sample,
    toy_velocity,
)
from .displacement import (
    DisplacementField,
    backward_field,
    displacement_field,
    lift,
    normalize_depth,
    pixel_center_grid,
    resize_bilinear,
    transform_project,
)
from .geometry import (
    Intrinsics,
    Pose,
    Trajectory,
    exp_so3,
    log_so3,
    make_motion,
    relative_to_first,
)
from .metrics import (
    BiasInputs,
    LeakageCalibration,
    MetricsReport,
    axis_alignment,
    compute_lambda,
    depth_warp_rmse,
    direction_bias,
    epipolar_rmse,
    leakage,
    psnr,
    rpe,
    umeyama_sim3,
)
from .resample import grid_sample, grid_sample_grad
from .scene import RenderOutput, Scene, generate_scene, mutual_visibility, render

__all__ = [
    "__version__",
    "Schedule",
    "ToyDenoiser",
    "UpdateConfig",
    "guided_update",
    "linear_schedule",
    "predict_z0",
    "reimpose_noise",
    "sample",
    "toy_velocity",
    "DisplacementField",
    "backward_field",
    "displacement_field",
    "lift",
    "normalize_depth",
    "pixel_center_grid",
    "resize_bilinear",
    "transform_project",
    "Intrinsics",
    "Pose",
    "Trajectory",
    "exp_so3",
    "log_so3",
    "make_motion",
    "relative_to_first",
    "BiasInputs",
    "LeakageCalibration",
    "MetricsReport",
    "axis_alignment",
    "compute_lambda",
    "depth_warp_rmse",
    "direction_bias",
    "epipolar_rmse",
    "leakage",
    "psnr",
    "rpe",
    "umeyama_sim3",
    "grid_sample",
    "grid_sample_grad",
    "RenderOutput",
    "Scene",
    "generate_scene",
    "mutual_visibility",
    "render",
]
