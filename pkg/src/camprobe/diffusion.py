"""Toy rectified-flow denoising loop with displacement-field guidance.

The sampler runs plain Euler steps z_{t-1} = z_t + (sigma_{t-1} - sigma_t) v
under a v-prediction parameterization (z_t = (1-sigma) z0 + sigma eps,
v = eps - z0).  During an early update window it warps the per-frame clean
estimate by the trajectory's displacement fields and reimposes noise, using
one of three strategies:

- full_resample: update v' = eps - z0' and recompute z_t' = z0' + sigma v'
- v_only: update v' but keep z_t unchanged
- warp_v: warp the whole velocity, v' = field o v (unstable; kept for
  completeness, excluded from the quality gates)

The stand-in for the denoising network is an exact oracle that knows a
clean target video.  During the window the oracle predicts from the
pristine target, so the fixed per-frame fields are applied once rather than
compounding across update steps; when the window closes it commits to the
last guided estimate, the way a real model keeps denoising whatever content
now sits in the latent.  Without that commitment the remaining flow would
contract straight back to the unwarped target and no control could survive
to sigma = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .displacement import backward_field, resize_bilinear
from .geometry import Trajectory, relative_to_first
from .resample import grid_sample

__all__ = [
    "Schedule",
    "UpdateConfig",
    "ToyDenoiser",
    "STRATEGIES",
    "linear_schedule",
    "predict_z0",
    "toy_velocity",
    "guided_update",
    "reimpose_noise",
    "sample",
]

STRATEGIES = ("full_resample", "v_only", "warp_v")

_WINDOW_EPS = 1e-9


@dataclass
class Schedule:
    """Noise levels indexed by timestep: sigmas[t] = sigma_t, t = 0..T.

    Strictly increasing in t with sigma_0 = 0 and sigma_T = 1, i.e. the
    sampling order T..0 sees a strictly decreasing sequence from 1 to 0.
    """

    sigmas: np.ndarray

    def __post_init__(self):
        self.sigmas = np.asarray(self.sigmas, dtype=float)
        if self.sigmas.ndim != 1 or len(self.sigmas) < 2:
            raise ValueError("schedule needs at least two noise levels")
        if self.sigmas[0] != 0.0 or self.sigmas[-1] != 1.0:
            raise ValueError("schedule endpoints must be sigma_0 = 0 and sigma_T = 1")
        if np.any(np.diff(self.sigmas) <= 0):
            raise ValueError("sigmas must be strictly monotone between the endpoints")

    @property
    def num_steps(self) -> int:
        return len(self.sigmas) - 1

    def sigma(self, t: int) -> float:
        return float(self.sigmas[t])


def linear_schedule(num_steps: int = 25) -> Schedule:
    """Rectified-flow schedule sigma_t = t / T."""
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    return Schedule(np.arange(num_steps + 1) / num_steps)


@dataclass
class UpdateConfig:
    """Guidance settings for the sampler.

    ``window`` holds (start, end) fractions of T; an update runs at step t
    iff end*T < t <= start*T.  The default (1.0, 0.8) yields 5 update steps
    on the default 25-step schedule.  ``fresh_noise=False`` recovers the
    reimposed noise from the unmodified latent instead of drawing new
    Gaussian noise.
    """

    omega: float = 1.0
    window: tuple = (1.0, 0.8)
    strategy: str = "full_resample"
    seed: int = 0
    fresh_noise: bool = True

    def __post_init__(self):
        if not np.isfinite(self.omega):
            raise ValueError("omega must be finite")
        start, end = self.window
        if not (0.0 <= end <= start <= 1.0):
            raise ValueError("window must satisfy 0 <= end <= start <= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")


@dataclass
class ToyDenoiser:
    """Exact oracle standing in for the denoising network.

    Knows the clean video and returns the rectified-flow velocity that
    transports any latent straight to it.
    """

    target: np.ndarray  # (F, H, W, C)

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float)
        if self.target.ndim != 4:
            raise ValueError("target must be (F, H, W, C)")
        if not np.all(np.isfinite(self.target)):
            raise ValueError("target must be finite")


def predict_z0(z_t: np.ndarray, v_t: np.ndarray, sigma: float) -> np.ndarray:
    """Clean-sample estimate z0 = z_t - sigma * v_t."""
    z_t = np.asarray(z_t, dtype=float)
    v_t = np.asarray(v_t, dtype=float)
    if z_t.shape != v_t.shape:
        raise ValueError("z_t and v_t shapes must match")
    return z_t - sigma * v_t


def toy_velocity(denoiser: ToyDenoiser, z_t: np.ndarray, sigma: float) -> np.ndarray:
    """Oracle velocity (z_t - target) / sigma; predict_z0 then recovers the target."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z_t = np.asarray(z_t, dtype=float)
    if z_t.shape != denoiser.target.shape:
        raise ValueError("latent shape must match the denoiser target")
    return (z_t - denoiser.target) / sigma


def guided_update(z0_hat: np.ndarray, fields, omega: float) -> np.ndarray:
    """Per-frame guidance z0' = z0 + omega * (field o z0 - z0)."""
    z0_hat = np.asarray(z0_hat, dtype=float)
    if len(fields) != z0_hat.shape[0]:
        raise ValueError(
            f"got {len(fields)} fields for {z0_hat.shape[0]} frames"
        )
    out = np.empty_like(z0_hat)
    for f, fld in enumerate(fields):
        warped = grid_sample(z0_hat[f], fld)
        out[f] = z0_hat[f] + omega * (warped - z0_hat[f])
    return out


def reimpose_noise(z0_prime: np.ndarray, sigma: float, noise: np.ndarray):
    """Noise a guided estimate back to level sigma: v' = eps - z0', z' = z0' + sigma v'."""
    z0_prime = np.asarray(z0_prime, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if z0_prime.shape != noise.shape:
        raise ValueError("z0_prime and noise shapes must match")
    if not (0.0 <= sigma <= 1.0):
        raise ValueError("sigma must lie in [0, 1]")
    v_prime = noise - z0_prime
    z_prime = z0_prime + sigma * v_prime
    return z_prime, v_prime


def _frame_noise(seed: int, step: int, num_frames: int, shape) -> np.ndarray:
    """Gaussian noise with an independent stream per (seed, step, frame).

    Per-frame streams keep results identical however frames are batched
    or parallelized.
    """
    return np.stack(
        [
            np.random.default_rng([seed, step, f]).standard_normal(shape)
            for f in range(num_frames)
        ]
    )


def _in_window(t: int, num_steps: int, window) -> bool:
    start, end = window
    return (t > end * num_steps + _WINDOW_EPS) and (t <= start * num_steps + _WINDOW_EPS)


def _per_frame_depths(depth, num_frames: int, height: int, width: int):
    """Normalize the depth argument to one (H, W) map per frame.

    Accepts a positive scalar (constant depth), a single map, or a
    sequence of per-frame maps; maps at other resolutions are resized
    bilinearly.
    """
    if depth is None:
        depth = 1.0
    if np.isscalar(depth):
        if depth <= 0:
            raise ValueError("constant depth must be positive")
        return [np.full((height, width), float(depth)) for _ in range(num_frames)]
    depth = [np.asarray(d, dtype=float) for d in depth]
    if len(depth) == 1:
        depth = depth * num_frames
    if len(depth) != num_frames:
        raise ValueError(f"got {len(depth)} depth maps for {num_frames} frames")
    return [
        d if d.shape == (height, width) else resize_bilinear(d, height, width)
        for d in depth
    ]


def sample(
    denoiser: ToyDenoiser,
    schedule: Schedule,
    traj: Trajectory,
    depth=None,
    cfg: UpdateConfig | None = None,
    trace: list | None = None,
) -> np.ndarray:
    """Run the guided denoising loop and return the final video.

    ``depth`` feeds the per-frame displacement fields (see
    ``_per_frame_depths`` for accepted forms).  The fields are built once
    from the trajectory rebased to its first frame and applied at every
    window step.  If ``trace`` is a list, one record per update step is
    appended with keys sigma/z0_prime/z_prime/v_prime for auditing the
    noise-reimposition algebra.

    Deterministic: all noise derives from (cfg.seed, step, frame).
    """
    cfg = cfg or UpdateConfig()
    num_frames, height, width, channels = denoiser.target.shape
    if traj.num_frames != num_frames:
        raise ValueError(
            f"trajectory has {traj.num_frames} frames, target has {num_frames}"
        )
    num_steps = schedule.num_steps

    rel = relative_to_first(traj)
    depths = _per_frame_depths(depth, num_frames, height, width)
    fields = [
        backward_field(depths[f], rel.poses[f], traj.intrinsics)
        for f in range(num_frames)
    ]

    z = _frame_noise(cfg.seed, 0, num_frames, (height, width, channels))
    belief = denoiser.target
    pending = None
    for t in range(num_steps, 0, -1):
        sigma_t = schedule.sigma(t)
        if _in_window(t, num_steps, cfg.window):
            # the oracle predicts from the pristine target inside the
            # window so the fixed fields are applied once, not compounded
            v = toy_velocity(denoiser, z, sigma_t)
            z0_hat = predict_z0(z, v, sigma_t)
            z0_prime = guided_update(z0_hat, fields, cfg.omega)
            if cfg.strategy == "warp_v":
                v = np.stack(
                    [grid_sample(v[f], fields[f]) for f in range(num_frames)]
                )
                z_prime = None
                v_prime = v
            else:
                if cfg.fresh_noise:
                    eps = _frame_noise(cfg.seed, t, num_frames, (height, width, channels))
                else:
                    eps = (z - (1.0 - sigma_t) * z0_hat) / sigma_t
                z_prime, v_prime = reimpose_noise(z0_prime, sigma_t, eps)
                v = v_prime
                if cfg.strategy == "full_resample":
                    z = z_prime
                pending = z0_prime
            if trace is not None:
                trace.append(
                    {
                        "step": t,
                        "sigma": sigma_t,
                        "z0_prime": z0_prime,
                        "z_prime": z_prime,
                        "v_prime": v_prime,
                    }
                )
        else:
            if pending is not None:
                belief = pending  # the oracle commits to the guided content
                pending = None
            v = (z - belief) / sigma_t
        z = z + (schedule.sigma(t - 1) - sigma_t) * v
    return z
