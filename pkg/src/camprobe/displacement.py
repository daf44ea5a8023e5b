"""Displacement fields from depth and camera motion.

Fields live on the pixel grid in normalized image coordinates: pixel
(i, j) of an H x W grid sits at ((2j+1)/W - 1, (2i+1)/H - 1), so both axes
span [-1, 1].  A field stores a per-pixel 2-vector offset (du, dv) plus a
validity mask; pixels whose lifted point lands at or behind the camera
(z <= Z_MIN) are flagged invalid instead of producing huge offsets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Intrinsics, Pose

__all__ = [
    "DisplacementField",
    "DEPTH_MODES",
    "Z_MIN",
    "pixel_center_grid",
    "lift",
    "transform_project",
    "displacement_field",
    "backward_field",
    "normalize_depth",
    "resize_bilinear",
]

Z_MIN = 1e-6

DEPTH_MODES = ("raw", "constant", "sequence", "per_frame")


@dataclass
class DisplacementField:
    """Per-pixel 2D offsets in normalized coordinates with a validity mask."""

    offsets: np.ndarray  # (H, W, 2), last axis is (du, dv)
    valid: np.ndarray  # (H, W) bool
    direction: str = "forward"  # "forward": u' - u; "backward": u_src - u

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=float)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.offsets.ndim != 3 or self.offsets.shape[2] != 2:
            raise ValueError(f"offsets must be (H, W, 2), got {self.offsets.shape}")
        if self.valid.shape != self.offsets.shape[:2]:
            raise ValueError("valid mask shape must match offsets grid")
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"unknown field direction {self.direction!r}")
        if not np.all(np.isfinite(self.offsets[self.valid])):
            raise ValueError("offsets must be finite on valid pixels")

    @property
    def shape(self):
        return self.offsets.shape[:2]


def pixel_center_grid(height: int, width: int) -> np.ndarray:
    """(H, W, 2) array of normalized pixel-center coordinates (u, v)."""
    u = (2.0 * np.arange(width) + 1.0) / width - 1.0
    v = (2.0 * np.arange(height) + 1.0) / height - 1.0
    uu, vv = np.meshgrid(u, v)
    return np.stack([uu, vv], axis=-1)


def lift(uv: np.ndarray, depth: np.ndarray, intrinsics: Intrinsics) -> np.ndarray:
    """Lift normalized coordinates to 3D points: p = d * K^-1 [u, v, 1].

    ``uv`` has shape (..., 2) and ``depth`` broadcasts against (...).
    """
    uv = np.asarray(uv, dtype=float)
    depth = np.asarray(depth, dtype=float)
    if np.any(depth <= 0):
        raise ValueError("depth must be positive")
    x = (uv[..., 0] - intrinsics.cx) / intrinsics.fx
    y = (uv[..., 1] - intrinsics.cy) / intrinsics.fy
    return np.stack([depth * x, depth * y, depth * np.ones_like(x)], axis=-1)


def transform_project(
    points: np.ndarray,
    pose: Pose,
    intrinsics: Intrinsics,
    z_min: float = Z_MIN,
):
    """Apply a pose and project: Pi(K (R p + t)).

    Returns ``(uv, valid)`` where ``valid`` flags points whose transformed
    depth exceeds ``z_min``; projected coordinates of invalid points are 0.
    """
    q = pose.apply(points)
    z = q[..., 2]
    valid = z > z_min
    safe_z = np.where(valid, z, 1.0)
    u = np.where(valid, intrinsics.fx * q[..., 0] / safe_z + intrinsics.cx, 0.0)
    v = np.where(valid, intrinsics.fy * q[..., 1] / safe_z + intrinsics.cy, 0.0)
    return np.stack([u, v], axis=-1), valid


def displacement_field(
    depth: np.ndarray, pose: Pose, intrinsics: Intrinsics | None = None
) -> DisplacementField:
    """Forward displacement field u' - u induced by a camera motion.

    Each pixel of the canonical view is lifted with its depth, moved by the
    pose and reprojected; the field maps canonical coordinates to their
    positions under the motion.
    """
    intrinsics = intrinsics or Intrinsics()
    depth = np.asarray(depth, dtype=float)
    grid = pixel_center_grid(*depth.shape)
    points = lift(grid, depth, intrinsics)
    uv, valid = transform_project(points, pose, intrinsics)
    offsets = np.where(valid[..., None], uv - grid, 0.0)
    return DisplacementField(offsets, valid, "forward")


def backward_field(
    depth: np.ndarray, pose: Pose, intrinsics: Intrinsics | None = None
) -> DisplacementField:
    """Backward field u_src - u for warping by grid sampling.

    For each pixel u of the *moved* view, the stored offset points at the
    canonical-view location that lands on u under the motion; sampling a
    canonical image with this field approximates applying the forward
    field.  The frame's own depth stands in for the moved view's depth,
    exact when the depth really is the moved view's.
    """
    intrinsics = intrinsics or Intrinsics()
    depth = np.asarray(depth, dtype=float)
    grid = pixel_center_grid(*depth.shape)
    points = lift(grid, depth, intrinsics)
    uv, valid = transform_project(points, pose.inverse(), intrinsics)
    offsets = np.where(valid[..., None], uv - grid, 0.0)
    return DisplacementField(offsets, valid, "backward")


def normalize_depth(depths, mode: str):
    """Apply a depth-normalization strategy to a sequence of depth maps.

    raw: unchanged; constant: all ones; sequence: every frame divided by
    the median of frame 1; per_frame: each frame divided by its own median.
    """
    if mode not in DEPTH_MODES:
        raise ValueError(f"unknown depth mode {mode!r}; expected one of {DEPTH_MODES}")
    depths = [np.asarray(d, dtype=float) for d in depths]
    if len(depths) == 0:
        raise ValueError("empty depth sequence")
    for d in depths:
        if np.any(d <= 0) or not np.all(np.isfinite(d)):
            raise ValueError("depth maps must be positive and finite")
    if mode == "raw":
        return [d.copy() for d in depths]
    if mode == "constant":
        return [np.ones_like(d) for d in depths]
    if mode == "sequence":
        scale = np.median(depths[0])
        return [d / scale for d in depths]
    return [d / np.median(d) for d in depths]


def resize_bilinear(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize an (H, W) grid to (height, width), aligning pixel centers."""
    values = np.asarray(values, dtype=float)
    src_h, src_w = values.shape
    x = (2.0 * np.arange(width) + 1.0) * src_w / (2.0 * width) - 0.5
    y = (2.0 * np.arange(height) + 1.0) * src_h / (2.0 * height) - 0.5
    x = np.clip(x, 0.0, src_w - 1.0)
    y = np.clip(y, 0.0, src_h - 1.0)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    x1 = np.minimum(x0 + 1, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    wx = (x - x0)[None, :]
    wy = (y - y0)[:, None]
    top = values[np.ix_(y0, x0)] * (1 - wx) + values[np.ix_(y0, x1)] * wx
    bottom = values[np.ix_(y1, x0)] * (1 - wx) + values[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bottom * wy
