"""Bit-exact file formats: binary tensors, JSON trajectories and reports.

Tensor files ("CPTF") are little-endian regardless of platform:

    magic   4 bytes  b"CPTF"
    version u16      currently 1
    dtype   u8       1 = float32
    rank    u8
    dims    rank x u32
    payload row-major float32 (last dimension fastest)

Trajectory files are JSON with unit quaternions (w, x, y, z order) and
translations under the "canonical_to_camera" convention; quaternions are
renormalized on load, the only lossy step.  Report files are JSON with all
metric keys present (null when not computed).  All writes go through a
temp-file-plus-rename so concurrent readers never see partial files.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from .geometry import Intrinsics, Pose, Trajectory, quat_to_rotation, rotation_to_quat
from .metrics import MetricsReport

__all__ = [
    "FileFormatError",
    "TENSOR_MAGIC",
    "TENSOR_VERSION",
    "read_tensor",
    "write_tensor",
    "read_trajectory",
    "write_trajectory",
    "read_report",
    "write_report",
    "atomic_write_bytes",
    "atomic_write_text",
]

TENSOR_MAGIC = b"CPTF"
TENSOR_VERSION = 1
_DTYPE_FLOAT32 = 1
_HEADER = struct.Struct("<4sHBB")

TRAJECTORY_CONVENTION = "canonical_to_camera"

# quaternions further than this from unit length are rejected on load
_QUAT_NORM_TOL = 1e-3


class FileFormatError(ValueError):
    """Malformed or truncated file content."""


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a same-directory temp file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_tensor(path, array: np.ndarray) -> None:
    """Serialize an array as float32 CPTF."""
    array = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    if array.ndim < 1:
        array = array.reshape(1)
    header = _HEADER.pack(TENSOR_MAGIC, TENSOR_VERSION, _DTYPE_FLOAT32, array.ndim)
    dims = struct.pack(f"<{array.ndim}I", *array.shape)
    atomic_write_bytes(path, header + dims + array.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a CPTF tensor, validating magic, version, dtype and length."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FileFormatError("tensor file too short for its header")
    magic, version, dtype, rank = _HEADER.unpack_from(blob)
    if magic != TENSOR_MAGIC:
        raise FileFormatError(f"bad magic {magic!r}")
    if version != TENSOR_VERSION:
        raise FileFormatError(f"unknown version {version}")
    if dtype != _DTYPE_FLOAT32:
        raise FileFormatError(f"unknown dtype code {dtype}")
    offset = _HEADER.size
    if len(blob) < offset + 4 * rank:
        raise FileFormatError("tensor file truncated in dimension list")
    dims = struct.unpack_from(f"<{rank}I", blob, offset)
    offset += 4 * rank
    expected = int(np.prod(dims, dtype=np.int64)) * 4
    payload = blob[offset:]
    if len(payload) < expected:
        raise FileFormatError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}"
        )
    if len(payload) > expected:
        raise FileFormatError(
            f"trailing data: expected {expected} payload bytes, found {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def write_trajectory(path, traj: Trajectory) -> None:
    doc = {
        "frames": traj.num_frames,
        "convention": TRAJECTORY_CONVENTION,
        "intrinsics": {
            "fx": traj.intrinsics.fx,
            "fy": traj.intrinsics.fy,
            "cx": traj.intrinsics.cx,
            "cy": traj.intrinsics.cy,
        },
        "poses": [
            {
                "q": [float(x) for x in rotation_to_quat(p.rotation)],
                "t": [float(x) for x in p.translation],
            }
            for p in traj.poses
        ],
    }
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_trajectory(path) -> Trajectory:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"trajectory file is not valid JSON: {exc}") from exc
    try:
        frames = int(doc["frames"])
        intr = doc["intrinsics"]
        intrinsics = Intrinsics(
            fx=float(intr["fx"]), fy=float(intr["fy"]), cx=float(intr["cx"]), cy=float(intr["cy"])
        )
        raw_poses = doc["poses"]
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"trajectory file missing field: {exc}") from exc
    if doc.get("convention") != TRAJECTORY_CONVENTION:
        raise FileFormatError(
            f"unsupported pose convention {doc.get('convention')!r}"
        )
    if frames != len(raw_poses):
        raise FileFormatError(
            f"declared {frames} frames but found {len(raw_poses)} poses"
        )
    poses = []
    for i, entry in enumerate(raw_poses):
        q = np.asarray(entry["q"], dtype=float)
        t = np.asarray(entry["t"], dtype=float)
        if q.shape != (4,) or t.shape != (3,):
            raise FileFormatError(f"pose {i} has malformed q or t")
        norm = float(np.linalg.norm(q))
        if abs(norm - 1.0) > _QUAT_NORM_TOL:
            raise FileFormatError(
                f"pose {i} quaternion norm {norm:.6f} far from 1"
            )
        poses.append(Pose(quat_to_rotation(q / norm), t))
    return Trajectory(poses, intrinsics)


def write_report(path, report) -> None:
    """Write a metrics report; accepts a MetricsReport or a plain dict.

    Every metric key is emitted, null when absent, so consumers can rely
    on the schema.
    """
    if isinstance(report, MetricsReport):
        doc = report.to_dict()
    else:
        doc = dict(report)
        metrics = dict(doc.get("metrics", {}))
        for key in MetricsReport.METRIC_KEYS:
            metrics.setdefault(key, None)
        doc["metrics"] = metrics
        doc.setdefault("metadata", {})
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_report(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"report file is not valid JSON: {exc}") from exc
