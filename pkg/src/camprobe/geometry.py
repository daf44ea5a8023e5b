"""Rigid camera motion: rotations, poses, trajectories, motion generators.

Conventions
-----------
A pose maps points from the canonical (first-frame) camera frame to the
target camera frame: ``p_target = R @ p + t``.  The camera center expressed
in canonical coordinates is therefore ``-R.T @ t``.  Camera axes follow the
usual computer-vision layout: x right, y down, z forward.  Motion
generators are named by what the *camera* does, so e.g. a rightward truck
produces ``t_x < 0`` (the scene shifts left in camera coordinates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Pose",
    "Intrinsics",
    "Trajectory",
    "MOTION_KINDS",
    "rotation_x",
    "rotation_y",
    "rotation_z",
    "is_rotation",
    "skew",
    "exp_so3",
    "log_so3",
    "quat_to_rotation",
    "rotation_to_quat",
    "relative_to_first",
    "make_motion",
]

# orthonormality / unit-determinant tolerance for rotation matrices
ROTATION_TOL = 1e-9


def rotation_x(angle: float) -> np.ndarray:
    """Rotation matrix about the x axis."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> np.ndarray:
    """Rotation matrix about the y axis."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(angle: float) -> np.ndarray:
    """Rotation matrix about the z axis."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def is_rotation(m: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    """True if m is orthonormal with determinant +1 within tol."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        return False
    ortho = np.max(np.abs(m @ m.T - np.eye(3)))
    return bool(ortho <= tol and abs(np.linalg.det(m) - 1.0) <= tol)


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ w == cross(v, w)."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_so3(rotvec: np.ndarray) -> np.ndarray:
    """Rotation matrix for an axis-angle vector (Rodrigues formula)."""
    w = np.asarray(rotvec, dtype=float)
    theta = float(np.linalg.norm(w))
    k = skew(w)
    if theta < 1e-8:
        # 2nd-order series; avoids 0/0 and stays orthonormal to rounding
        a = 1.0 - theta**2 / 6.0
        b = 0.5 - theta**2 / 24.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta**2
    return np.eye(3) + a * k + b * (k @ k)


def log_so3(rotation: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix, with norm in [0, pi].

    Uses a first-order branch near theta=0.  Near theta=pi, where the
    antisymmetric part cancels, the angle comes from arcsin(|anti|)
    (well conditioned there, unlike arccos of the trace) and the axis
    from the dominant column of the symmetric outer product a a^T.
    """
    r = np.asarray(rotation, dtype=float)
    cos_theta = min(1.0, max(-1.0, (np.trace(r) - 1.0) / 2.0))
    theta = math.acos(cos_theta)
    anti = 0.5 * np.array(
        [r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]
    )
    if theta < 1e-7:
        return anti
    if math.pi - theta < 1e-3:
        sin_theta = min(1.0, float(np.linalg.norm(anti)))
        theta = math.pi - math.asin(sin_theta)
        # a a^T = (sym(R) - cos I) / (1 - cos); 1 - cos ~= 2 here
        outer = ((r + r.T) / 2.0 - cos_theta * np.eye(3)) / (1.0 - cos_theta)
        k = int(np.argmax(np.diag(outer)))
        axis = outer[:, k]
        axis /= np.linalg.norm(axis)
        if axis @ anti < 0.0:  # sin(theta) >= 0, so anti points along the axis
            axis = -axis
        return theta * axis
    return (theta / math.sin(theta)) * anti


def quat_to_rotation(q: np.ndarray) -> np.ndarray:
    """Rotation matrix from a unit quaternion in (w, x, y, z) order."""
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array(
        [
            [1 - 2 * y * y - 2 * z * z, 2 * x * y - 2 * w * z, 2 * x * z + 2 * w * y],
            [2 * x * y + 2 * w * z, 1 - 2 * x * x - 2 * z * z, 2 * y * z - 2 * w * x],
            [2 * x * z - 2 * w * y, 2 * y * z + 2 * w * x, 1 - 2 * x * x - 2 * y * y],
        ]
    )


def rotation_to_quat(r: np.ndarray) -> np.ndarray:
    """Quaternion (w, x, y, z) from a rotation matrix, w >= 0."""
    r = np.asarray(r, dtype=float)
    trace = r[0, 0] + r[1, 1] + r[2, 2]
    if trace > 0:
        s = 0.5 / math.sqrt(trace + 1.0)
        q = np.array(
            [0.25 / s, (r[2, 1] - r[1, 2]) * s, (r[0, 2] - r[2, 0]) * s, (r[1, 0] - r[0, 1]) * s]
        )
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = 2.0 * math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        q = np.array(
            [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
        )
    elif r[1, 1] > r[2, 2]:
        s = 2.0 * math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2])
        q = np.array(
            [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
        )
    else:
        s = 2.0 * math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1])
        q = np.array(
            [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
        )
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


@dataclass
class Pose:
    """Rigid transform taking canonical-frame points to camera-frame points."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float).reshape(3)
        if self.rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {self.rotation.shape}")
        if not np.all(np.isfinite(self.rotation)) or not np.all(np.isfinite(self.translation)):
            raise ValueError("pose components must be finite")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def compose(self, other: "Pose") -> "Pose":
        """self after other: (self.compose(other))(p) == self(other(p))."""
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform points of shape (..., 3)."""
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def center(self) -> np.ndarray:
        """Camera center in canonical coordinates: -R.T @ t."""
        return -self.rotation.T @ self.translation


@dataclass
class Intrinsics:
    """Pinhole intrinsics in normalized image coordinates.

    The default (unit focal length, zero principal point) matches the
    normalized [-1, 1] coordinate convention used throughout.
    """

    fx: float = 1.0
    fy: float = 1.0
    cx: float = 0.0
    cy: float = 0.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass
class Trajectory:
    """A sequence of per-frame poses sharing one set of intrinsics."""

    poses: list
    intrinsics: Intrinsics = field(default_factory=Intrinsics)

    def __post_init__(self):
        self.poses = list(self.poses)
        if len(self.poses) < 1:
            raise ValueError("trajectory needs at least one frame")

    @property
    def num_frames(self) -> int:
        return len(self.poses)

    def __len__(self) -> int:
        return len(self.poses)

    def __getitem__(self, i) -> Pose:
        return self.poses[i]

    def __iter__(self):
        return iter(self.poses)


def relative_to_first(traj: Trajectory) -> Trajectory:
    """Rebase so frame 1 becomes the canonical view: out_f = T_f o T_1^-1."""
    first_inv = traj.poses[0].inverse()
    rel = [p.compose(first_inv) for p in traj.poses]
    return Trajectory(rel, traj.intrinsics)


MOTION_KINDS = ("pan", "tilt", "truck", "pedestal", "dolly", "zoom", "arc", "orbit")

_ALIASES = {"zoom": "dolly", "arc": "orbit"}


def make_motion(
    kind: str,
    magnitude: float,
    num_frames: int,
    radius: float = 2.0,
    intrinsics: Intrinsics | None = None,
) -> Trajectory:
    """Generate a named camera motion.

    ``magnitude`` is the end-of-clip rotation (radians) or translation
    (scene units), interpolated linearly over the frames (constant
    velocity).  Kinds:

    - pan / tilt: pure rotation about the camera y / x axis
      (positive = right / up), zero translation.
    - truck / pedestal / dolly: pure translation of the camera along its
      x / y / z axis (positive = right / down / forward), identity rotation.
      "zoom" is an alias of dolly.
    - orbit (alias "arc"): camera centers on a circle of ``radius`` about
      the y axis through the scene origin, aimed at the origin;
      ``magnitude`` is the total sweep angle.  Frame 1 sits at
      (0, 0, -radius) with identity rotation.
    """
    key = _ALIASES.get(kind.lower(), kind.lower())
    if kind.lower() not in MOTION_KINDS:
        raise ValueError(f"unknown motion kind {kind!r}; expected one of {MOTION_KINDS}")
    if num_frames < 1:
        raise ValueError("num_frames must be >= 1")
    if num_frames == 1:
        alphas = np.zeros(1)
    else:
        alphas = magnitude * np.arange(num_frames) / (num_frames - 1)

    poses = []
    for a in alphas:
        if key == "pan":
            poses.append(Pose(rotation_y(-a), np.zeros(3)))
        elif key == "tilt":
            poses.append(Pose(rotation_x(-a), np.zeros(3)))
        elif key == "truck":
            poses.append(Pose(np.eye(3), np.array([-a, 0.0, 0.0])))
        elif key == "pedestal":
            poses.append(Pose(np.eye(3), np.array([0.0, -a, 0.0])))
        elif key == "dolly":
            poses.append(Pose(np.eye(3), np.array([0.0, 0.0, -a])))
        else:  # orbit
            if radius <= 0:
                raise ValueError("orbit radius must be positive")
            # camera orientation in scene coordinates is rotation_y(-phi),
            # so the pose (its transpose) is rotation_y(phi)
            poses.append(Pose(rotation_y(a), np.array([0.0, 0.0, radius])))
    return Trajectory(poses, intrinsics or Intrinsics())
