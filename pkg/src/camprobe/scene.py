"""Procedural planar scenes with analytic rendering and ground-truth depth.

Scenes are small sets of textured, mostly fronto-parallel quads placed in
front of the canonical camera, rendered by exact per-pixel ray-plane
intersection with nearest-hit selection.  They provide the brute-force
ground truth (images, depth, tracked correspondences) against which the
warping pipeline and the consistency metrics are validated.

Textures are band-limited sums of seeded sinusoids over a shared mid-gray
base, which keeps bilinear resampling error small and bounds the color
jump across plane boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .displacement import DisplacementField, pixel_center_grid
from .geometry import Intrinsics, Pose, exp_so3

__all__ = [
    "Plane",
    "Scene",
    "RenderOutput",
    "generate_scene",
    "render",
    "filled_depth",
    "mutual_visibility",
]

# rays closer than this are treated as degenerate (behind the camera)
_RAY_EPS = 1e-6

_MARKERS_PER_PLANE = 8


@dataclass
class Plane:
    """Textured quad: center +/- axis_u +/- axis_v, axes scaled by half-extent."""

    center: np.ndarray  # (3,)
    axis_u: np.ndarray  # (3,)
    axis_v: np.ndarray  # (3,)
    tex_amp: np.ndarray  # (K, 3) per-component per-channel amplitudes
    tex_freq: np.ndarray  # (K, 2) cycles per local unit
    tex_phase: np.ndarray  # (K,)

    def normal(self) -> np.ndarray:
        return np.cross(self.axis_u, self.axis_v)

    def texture(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        """RGB in [0, 1] at local coordinates (s, t) in [-1, 1]^2."""
        phase = (
            2.0 * np.pi * (np.multiply.outer(s, self.tex_freq[:, 0])
                           + np.multiply.outer(t, self.tex_freq[:, 1]))
            + self.tex_phase
        )
        rgb = 0.5 + np.sin(phase) @ self.tex_amp
        return np.clip(rgb, 0.0, 1.0)


@dataclass
class Scene:
    planes: list
    markers: np.ndarray  # (M, 3) tracked texture points
    marker_plane: np.ndarray  # (M,) owning plane index
    background_color: np.ndarray = dataclass_field(
        default_factory=lambda: np.array([0.5, 0.5, 0.5])
    )


@dataclass
class RenderOutput:
    image: np.ndarray  # (H, W, 3) RGB in [0, 1]
    depth: np.ndarray  # (H, W), +inf where no surface is hit
    plane_id: np.ndarray  # (H, W) int, -1 where no surface is hit
    correspondences: np.ndarray  # (M', 2, 2): (u_canonical, u_target) pairs


def generate_scene(seed: int, num_planes: int = 4) -> Scene:
    """Deterministic scene with one large backdrop plus foreground quads.

    All plane corners lie at depths within [1, 5] in front of the canonical
    camera.  The backdrop is oversized so that nearby views keep full
    image coverage.
    """
    if num_planes < 1:
        raise ValueError("num_planes must be >= 1")
    rng = np.random.default_rng(seed)
    planes = []
    markers = []
    marker_plane = []

    def _texture_params():
        k = 6
        amp = rng.uniform(0.25, 1.0, size=(k, 3)) * rng.choice([-1.0, 1.0], size=(k, 3))
        amp *= 0.20 / np.abs(amp).sum(axis=0).max()
        freq = rng.uniform(0.2, 1.2, size=(k, 2)) * rng.choice([-1.0, 1.0], size=(k, 2))
        phase = rng.uniform(0.0, 2.0 * np.pi, size=k)
        return amp, freq, phase

    def _tilted_axes(max_tilt):
        r = exp_so3(rng.uniform(-1.0, 1.0, size=3) * max_tilt / np.sqrt(3.0))
        return r[:, 0], r[:, 1]

    for idx in range(num_planes):
        if idx == 0:
            z0 = rng.uniform(4.0, 4.5)
            half = 1.6 * z0
            cx, cy = rng.uniform(-0.1, 0.1, size=2) * z0
            ax, ay = _tilted_axes(0.05)
        else:
            z0 = rng.uniform(1.4, 3.6)
            half = rng.uniform(0.35, 0.9)
            cx, cy = rng.uniform(-0.55, 0.55, size=2) * z0
            ax, ay = _tilted_axes(0.12)
        amp, freq, phase = _texture_params()
        plane = Plane(
            center=np.array([cx, cy, z0]),
            axis_u=ax * half,
            axis_v=ay * half,
            tex_amp=amp,
            tex_freq=freq,
            tex_phase=phase,
        )
        planes.append(plane)
        local = rng.uniform(-0.85, 0.85, size=(_MARKERS_PER_PLANE, 2))
        pts = plane.center + np.outer(local[:, 0], plane.axis_u) + np.outer(
            local[:, 1], plane.axis_v
        )
        markers.append(pts)
        marker_plane.extend([idx] * _MARKERS_PER_PLANE)

    return Scene(
        planes=planes,
        markers=np.concatenate(markers, axis=0),
        marker_plane=np.array(marker_plane, dtype=int),
    )


def _intersect(scene: Scene, origins: np.ndarray, dirs: np.ndarray):
    """Nearest ray-plane hits.

    ``origins`` broadcasts against ``dirs`` of shape (..., 3).  Returns
    (t, plane_id, s, tt): ray parameter (inf for misses), hit plane index
    (-1 for misses) and local plane coordinates of the hit.
    """
    base = np.broadcast_shapes(origins.shape[:-1], dirs.shape[:-1])
    best_t = np.full(base, np.inf)
    best_id = np.full(base, -1, dtype=int)
    best_s = np.zeros(base)
    best_tt = np.zeros(base)
    for idx, pl in enumerate(scene.planes):
        n = pl.normal()
        denom = dirs @ n
        num = (pl.center - origins) @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(denom) > 0, num / denom, np.inf)
        hit = origins + t[..., None] * dirs
        rel = hit - pl.center
        s = (rel @ pl.axis_u) / (pl.axis_u @ pl.axis_u)
        tt = (rel @ pl.axis_v) / (pl.axis_v @ pl.axis_v)
        ok = (
            np.isfinite(t)
            & (t > _RAY_EPS)
            & (np.abs(s) <= 1.0)
            & (np.abs(tt) <= 1.0)
            & (t < best_t)
        )
        best_t = np.where(ok, t, best_t)
        best_id = np.where(ok, idx, best_id)
        best_s = np.where(ok, s, best_s)
        best_tt = np.where(ok, tt, best_tt)
    return best_t, best_id, best_s, best_tt


def render(
    scene: Scene,
    pose: Pose,
    intrinsics: Intrinsics | None = None,
    height: int = 60,
    width: int = 104,
) -> RenderOutput:
    """Render the scene from a camera at ``pose`` (canonical-to-camera).

    Depth is the camera-frame z of the nearest hit (+inf on background).
    Correspondences pair each tracked marker's normalized coordinates in
    the canonical view with those in this view, for markers that are
    unoccluded and inside the image in both.
    """
    intrinsics = intrinsics or Intrinsics()
    grid = pixel_center_grid(height, width)
    dirs_cam = np.concatenate(
        [
            (grid[..., :1] - intrinsics.cx) / intrinsics.fx,
            (grid[..., 1:] - intrinsics.cy) / intrinsics.fy,
            np.ones((height, width, 1)),
        ],
        axis=-1,
    )
    # rigid transforms preserve the ray parameter, and dirs have unit z in
    # the camera frame, so the parameter of a hit IS its camera depth
    dirs = dirs_cam @ pose.rotation  # R.T applied to each direction
    origin = pose.center()
    depth, plane_id, s, tt = _intersect(scene, origin, dirs)

    image = np.broadcast_to(scene.background_color, (height, width, 3)).copy()
    for idx, pl in enumerate(scene.planes):
        mask = plane_id == idx
        if np.any(mask):
            image[mask] = pl.texture(s[mask], tt[mask])

    corr = _marker_correspondences(scene, pose, intrinsics)
    return RenderOutput(image=image, depth=depth, plane_id=plane_id, correspondences=corr)


def _marker_visibility(scene: Scene, pose: Pose, intrinsics: Intrinsics):
    """Per-marker projected coordinates and unoccluded-visibility flags."""
    p_cam = pose.apply(scene.markers)
    z = p_cam[:, 2]
    front = z > _RAY_EPS
    safe_z = np.where(front, z, 1.0)
    u = intrinsics.fx * p_cam[:, 0] / safe_z + intrinsics.cx
    v = intrinsics.fy * p_cam[:, 1] / safe_z + intrinsics.cy
    uv = np.stack([u, v], axis=-1)
    inside = front & (np.abs(u) <= 1.0) & (np.abs(v) <= 1.0)
    # occlusion: the nearest hit along the marker's own ray must be its plane
    dirs = (p_cam / safe_z[:, None]) @ pose.rotation
    t_near, id_near, _, _ = _intersect(scene, pose.center(), dirs)
    unoccluded = inside & (id_near == scene.marker_plane) & (t_near <= z + 1e-9)
    return uv, unoccluded


def _marker_correspondences(scene: Scene, pose: Pose, intrinsics: Intrinsics) -> np.ndarray:
    uv_canon, vis_canon = _marker_visibility(scene, Pose.identity(), intrinsics)
    uv_target, vis_target = _marker_visibility(scene, pose, intrinsics)
    both = vis_canon & vis_target
    return np.stack([uv_canon[both], uv_target[both]], axis=1)


def filled_depth(out: RenderOutput, fill: float = 1e6) -> np.ndarray:
    """Depth map with background +inf replaced by a large finite value."""
    return np.where(np.isfinite(out.depth), out.depth, fill)


def mutual_visibility(
    canonical: RenderOutput, target: RenderOutput, field: DisplacementField
) -> np.ndarray:
    """Pixels whose nearest-hit plane matches under both views.

    The canonical plane-id map is looked up at the (rounded) source
    location of each target pixel under the backward field.
    """
    h, w = field.shape
    pos = pixel_center_grid(h, w) + field.offsets
    x = np.clip(np.round(((pos[..., 0] + 1.0) * w - 1.0) / 2.0).astype(int), 0, w - 1)
    y = np.clip(np.round(((pos[..., 1] + 1.0) * h - 1.0) / 2.0).astype(int), 0, h - 1)
    src_id = canonical.plane_id[y, x]
    return field.valid & (target.plane_id >= 0) & (src_id == target.plane_id)
