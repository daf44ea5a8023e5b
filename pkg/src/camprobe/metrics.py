"""Camera-control evaluation: windowed RPE with Sim(3) alignment, motion
leakage, direction bias, epipolar and depth-warp consistency, axis cosines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .displacement import backward_field, resize_bilinear
from .geometry import Intrinsics, Pose, Trajectory, log_so3, skew
from .resample import grid_sample

__all__ = [
    "LeakageCalibration",
    "BiasInputs",
    "MetricsReport",
    "DegenerateBaselineError",
    "RPE_WINDOWS",
    "EPSILON",
    "psnr",
    "umeyama_sim3",
    "sim3_align",
    "rpe",
    "compute_lambda",
    "leakage",
    "direction_bias",
    "epipolar_rmse",
    "depth_warp_rmse",
    "axis_alignment",
]

# temporal window sizes the evaluation averages over
RPE_WINDOWS = (1, 4, 8, 12)

# guard added to leakage denominators
EPSILON = 1e-9

# relative poses with a baseline below this cannot define an epipolar line
MIN_BASELINE = 1e-6


class DegenerateBaselineError(ValueError):
    """Raised when a frame pair's baseline is too small for epipolar geometry."""


@dataclass
class LeakageCalibration:
    """Unit conversion between rotational and translational motion.

    ``lam`` (scene units per radian) is the ratio of the mean ground-truth
    translation magnitude over translation-only motions to the mean
    ground-truth rotation magnitude over rotation-only motions.
    """

    d_ref: float
    r_ref: float
    lam: float
    epsilon: float = EPSILON

    def __post_init__(self):
        if not (self.r_ref > 0 and self.lam > 0):
            raise ValueError("calibration requires positive rotation reference")


@dataclass
class BiasInputs:
    """Scalar dynamics/quality scores for a base run and a camera run."""

    d_base: float
    q_base: float
    d_cam: float
    q_cam: float

    def __post_init__(self):
        if not (self.d_base > 0 and self.q_base > 0):
            raise ValueError("baseline dynamics and quality must be positive")


@dataclass
class MetricsReport:
    """Aggregated evaluation results; unset metrics stay None."""

    rpe_t: float | None = None
    rpe_r: float | None = None
    leakage_gt: dict | None = None
    leakage_pred: dict | None = None
    d_inc: float | None = None
    q_dec: float | None = None
    epipolar_rmse_px: float | None = None
    depth_warp_rmse: float | None = None
    axis_cos_t: float | None = None
    axis_cos_r: float | None = None
    axis_combined: float | None = None
    metadata: dict = dataclass_field(default_factory=dict)

    METRIC_KEYS = (
        "rpe_t",
        "rpe_r",
        "leakage_gt",
        "leakage_pred",
        "d_inc",
        "q_dec",
        "epipolar_rmse_px",
        "depth_warp_rmse",
        "axis_cos_t",
        "axis_cos_r",
        "axis_combined",
    )

    def to_dict(self) -> dict:
        metrics = {k: getattr(self, k) for k in self.METRIC_KEYS}
        return {"metrics": metrics, "metadata": dict(self.metadata)}


def psnr(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None = None, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical inputs.

    ``mask`` selects pixels on the leading (H, W) axes.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if mask is not None:
        a, b = a[mask], b[mask]
    if a.size == 0:
        raise ValueError("psnr over an empty selection")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(peak * peak / mse)


def umeyama_sim3(src: np.ndarray, dst: np.ndarray):
    """Least-squares similarity aligning src to dst: min sum ||dst - (s R src + t)||^2.

    Returns (s, R, t) with det(R) = +1 enforced by a sign correction on the
    smallest singular value.  Requires N >= 3 non-collinear points.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValueError("src and dst must be matching (N, 3) arrays")
    n = src.shape[0]
    if n < 3:
        raise ValueError("similarity alignment needs at least 3 points")
    mu_src = src.mean(axis=0)
    mu_dst = dst.mean(axis=0)
    src_c = src - mu_src
    dst_c = dst - mu_dst
    cov = dst_c.T @ src_c / n
    u, d, vt = np.linalg.svd(cov)
    if np.sum(d > 1e-12 * max(d[0], 1e-300)) < 2:
        raise ValueError("degenerate (collinear) point configuration")
    sign = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        sign[2] = -1.0
    rotation = u @ np.diag(sign) @ vt
    var_src = float(np.mean(np.sum(src_c**2, axis=1)))
    if var_src <= 0:
        raise ValueError("degenerate source configuration")
    scale = float(np.sum(d * sign)) / var_src
    translation = mu_dst - scale * rotation @ mu_src
    return scale, rotation, translation


def sim3_align(est: Trajectory, gt: Trajectory) -> Trajectory:
    """Map est poses through the similarity aligning their camera centers to gt's."""
    centers_est = np.array([p.center() for p in est.poses])
    centers_gt = np.array([p.center() for p in gt.poses])
    scale, rotation, translation = umeyama_sim3(centers_est, centers_gt)
    aligned = []
    for p in est.poses:
        new_center = scale * rotation @ p.center() + translation
        new_rotation = p.rotation @ rotation.T
        aligned.append(Pose(new_rotation, -new_rotation @ new_center))
    return Trajectory(aligned, est.intrinsics)


def _rotation_angle(r: np.ndarray) -> float:
    return math.acos(min(1.0, max(-1.0, (np.trace(r) - 1.0) / 2.0)))


def rpe(
    est: Trajectory,
    gt: Trajectory,
    windows=RPE_WINDOWS,
    align: str = "none",
):
    """Relative pose error averaged over temporal windows.

    For window d and start i the error motion is
    E = (gt_i^-1 gt_{i+d})^-1 (est_i^-1 est_{i+d}); the translation error is
    mean ||trans(E)|| (scene units) and the rotation error is the mean
    rotation angle of E in degrees, each averaged per window then across
    windows.  ``align="sim3"`` first registers est to gt with a global
    similarity on camera centers.
    """
    if est.num_frames != gt.num_frames:
        raise ValueError("trajectories must have equal length")
    if align not in ("none", "sim3"):
        raise ValueError(f"unknown alignment mode {align!r}")
    n = est.num_frames
    for d in windows:
        if not 1 <= d < n:
            raise ValueError(f"window {d} must be positive and smaller than {n} frames")
    if align == "sim3":
        est = sim3_align(est, gt)
    mats_est = [p.matrix() for p in est.poses]
    mats_gt = [p.matrix() for p in gt.poses]
    t_means, r_means = [], []
    for d in windows:
        t_errs, r_errs = [], []
        for i in range(n - d):
            rel_gt = np.linalg.inv(mats_gt[i]) @ mats_gt[i + d]
            rel_est = np.linalg.inv(mats_est[i]) @ mats_est[i + d]
            err = np.linalg.inv(rel_gt) @ rel_est
            t_errs.append(np.linalg.norm(err[:3, 3]))
            r_errs.append(math.degrees(_rotation_angle(err[:3, :3])))
        t_means.append(np.mean(t_errs))
        r_means.append(np.mean(r_errs))
    return float(np.mean(t_means)), float(np.mean(r_means))


def _adjacent_motion(traj: Trajectory):
    """Per-step relative rotation vectors and translation deltas.

    Follows the adjacent-frame convention dR_f = R_{f+1} R_f^T,
    dt_f = t_{f+1} - t_f on the raw pose components.
    """
    rot_vecs, trans_deltas = [], []
    for a, b in zip(traj.poses[:-1], traj.poses[1:]):
        rot_vecs.append(log_so3(b.rotation @ a.rotation.T))
        trans_deltas.append(b.translation - a.translation)
    return np.array(rot_vecs), np.array(trans_deltas)


def _motion_sums(traj: Trajectory):
    rot_vecs, trans_deltas = _adjacent_motion(traj)
    return (
        float(np.sum(np.linalg.norm(rot_vecs, axis=1))),
        float(np.sum(np.linalg.norm(trans_deltas, axis=1))),
    )


def compute_lambda(gt_rotation_seqs, gt_translation_seqs) -> LeakageCalibration:
    """Calibrate the rotation-to-translation conversion factor.

    d_ref is the mean over translation-only sequences of the summed
    per-step translation magnitude; r_ref likewise for rotation-only
    sequences; lam = d_ref / r_ref.
    """
    if not gt_rotation_seqs or not gt_translation_seqs:
        raise ValueError("calibration needs both rotation and translation sequences")
    r_ref = float(np.mean([_motion_sums(t)[0] for t in gt_rotation_seqs]))
    d_ref = float(np.mean([_motion_sums(t)[1] for t in gt_translation_seqs]))
    if r_ref <= 0 or d_ref <= 0:
        raise ValueError("calibration sequences must contain nonzero motion")
    return LeakageCalibration(d_ref=d_ref, r_ref=r_ref, lam=d_ref / r_ref)


def leakage(
    pred: Trajectory,
    gt: Trajectory,
    cal: LeakageCalibration,
    norm: str = "gt",
) -> dict:
    """Unintended-motion ratios between rotation and translation.

    trans_to_rot: rotational motion appearing under a translation command;
    rot_to_trans: the reverse.  ``norm="gt"`` normalizes by ground-truth
    motion, ``norm="pred"`` by the predicted motion magnitude.
    """
    if pred.num_frames != gt.num_frames:
        raise ValueError("trajectories must have equal length")
    if norm not in ("gt", "pred"):
        raise ValueError(f"unknown normalization {norm!r}")
    rot_pred, trans_pred = _motion_sums(pred)
    rot_gt, trans_gt = _motion_sums(gt)
    eps = cal.epsilon
    if norm == "gt":
        return {
            "trans_to_rot": cal.lam * rot_pred / (trans_gt + eps),
            "rot_to_trans": trans_pred / (cal.lam * rot_gt + eps),
        }
    return {
        "trans_to_rot": cal.lam * rot_pred / (trans_pred + eps),
        "rot_to_trans": trans_pred / (cal.lam * rot_pred + eps),
    }


def direction_bias(b: BiasInputs):
    """Relative dynamics increase and quality decrease vs the base run."""
    d_inc = (b.d_cam - b.d_base) / b.d_base
    q_dec = (b.q_base - b.q_cam) / b.q_base
    return d_inc, q_dec


def epipolar_rmse(
    correspondences: np.ndarray,
    rel_pose: Pose,
    intrinsics: Intrinsics | None = None,
    pixel_scale=(104, 60),
) -> float:
    """RMSE of the symmetric epipolar distance in pixels.

    ``correspondences`` is (N, 2, 2): pairs of normalized coordinates
    (u_view1, u_view2) related by ``rel_pose`` (view 1 to view 2).  The
    fundamental matrix comes from the pose, F = K^-T [t]x R K^-1, and is
    conjugated into pixel space so anisotropic W x H grids measure true
    pixel distances.  Each pair contributes the quadratic-mean symmetric
    point-to-line distance, which is exactly swap-invariant.
    """
    intrinsics = intrinsics or Intrinsics()
    correspondences = np.asarray(correspondences, dtype=float)
    if correspondences.ndim != 3 or correspondences.shape[1:] != (2, 2):
        raise ValueError("correspondences must be (N, 2, 2)")
    if correspondences.shape[0] < 1:
        raise ValueError("need at least one correspondence")
    t = rel_pose.translation
    if np.linalg.norm(t) < MIN_BASELINE:
        raise DegenerateBaselineError(
            f"baseline {np.linalg.norm(t):.2e} below {MIN_BASELINE:.0e}"
        )
    k_inv = np.linalg.inv(intrinsics.matrix())
    f_norm = k_inv.T @ skew(t) @ rel_pose.rotation @ k_inv
    w, h = pixel_scale
    # normalized [-1,1] to pixel coordinates, pixel-center convention
    s = np.array(
        [[w / 2.0, 0.0, (w - 1.0) / 2.0], [0.0, h / 2.0, (h - 1.0) / 2.0], [0.0, 0.0, 1.0]]
    )
    s_inv = np.linalg.inv(s)
    f_px = s_inv.T @ f_norm @ s_inv

    ones = np.ones((correspondences.shape[0], 1))
    u1 = np.hstack([(correspondences[:, 0] + 1.0) * [w / 2.0, h / 2.0] - 0.5, ones])
    u2 = np.hstack([(correspondences[:, 1] + 1.0) * [w / 2.0, h / 2.0] - 0.5, ones])
    line2 = u1 @ f_px.T  # epipolar lines in view 2
    line1 = u2 @ f_px  # epipolar lines in view 1
    residual = np.sum(u2 * line2, axis=1)
    d2 = residual**2 / np.sum(line2[:, :2] ** 2, axis=1)
    d1 = residual**2 / np.sum(line1[:, :2] ** 2, axis=1)
    return float(np.sqrt(np.mean((d1 + d2) / 2.0)))


def depth_warp_rmse(frames, depths, traj: Trajectory) -> float:
    """Consistency of a sequence under depth-based warping of frame 1.

    Frame 1 is warped to every subsequent frame through the relative pose
    and that frame's depth map; the RMSE over field-valid pixels is
    averaged across frames.  Frames are (H, W, C) in normalized units.
    """
    frames = [np.asarray(f, dtype=float) for f in frames]
    depths = [np.asarray(d, dtype=float) for d in depths]
    if not (len(frames) == len(depths) == traj.num_frames):
        raise ValueError("frames, depths and trajectory lengths must match")
    if len(frames) < 2:
        raise ValueError("need at least two frames")
    first_inv = traj.poses[0].inverse()
    height, width = frames[0].shape[:2]
    errs = []
    for f in range(1, len(frames)):
        rel = traj.poses[f].compose(first_inv)
        depth = depths[f]
        if depth.shape != (height, width):
            depth = resize_bilinear(depth, height, width)
        fld = backward_field(depth, rel, traj.intrinsics)
        warped = grid_sample(frames[0], fld)
        diff = (warped - frames[f])[fld.valid]
        if diff.size == 0:
            raise ValueError(f"no valid pixels when warping to frame {f}")
        errs.append(float(np.sqrt(np.mean(diff**2))))
    return float(np.mean(errs))


def axis_alignment(est: Trajectory, gt: Trajectory):
    """Mean cosine between per-step est and gt motion axes.

    Translation and rotation steps with (near-)zero magnitude on either
    side are skipped; the combined score is the mean of the two cosines
    (ignoring one if it had no usable steps).  Raises if every step of
    both kinds is degenerate.
    """
    if est.num_frames != gt.num_frames:
        raise ValueError("trajectories must have equal length")
    rot_est, trans_est = _adjacent_motion(est)
    rot_gt, trans_gt = _adjacent_motion(gt)

    def _mean_cosine(a, b):
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        ok = (na > 1e-12) & (nb > 1e-12)
        if not np.any(ok):
            return None
        return float(np.mean(np.sum(a[ok] * b[ok], axis=1) / (na[ok] * nb[ok])))

    cos_t = _mean_cosine(trans_est, trans_gt)
    cos_r = _mean_cosine(rot_est, rot_gt)
    if cos_t is None and cos_r is None:
        raise ValueError("all steps degenerate; no motion to compare")
    parts = [c for c in (cos_t, cos_r) if c is not None]
    combined = float(np.mean(parts))
    return (
        cos_t if cos_t is not None else float("nan"),
        cos_r if cos_r is not None else float("nan"),
        combined,
    )
