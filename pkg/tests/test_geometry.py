"""Geometry tests: pose algebra against a homogeneous-matrix oracle,
rotation log/exp against scipy and the Rodrigues round trip, and the
motion generators' stated shapes."""

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from camprobe.geometry import (
    Intrinsics,
    Pose,
    Trajectory,
    exp_so3,
    is_rotation,
    log_so3,
    make_motion,
    quat_to_rotation,
    relative_to_first,
    rotation_to_quat,
    rotation_y,
    rotation_z,
)

from conftest import random_pose, random_rotation


class TestPoseAlgebra:
    def test_identity_inverse(self):
        p = Pose.identity().inverse()
        np.testing.assert_allclose(p.rotation, np.eye(3))
        np.testing.assert_allclose(p.translation, np.zeros(3))

    def test_inverse_is_involution(self, rng):
        for _ in range(20):
            p = random_pose(rng)
            q = p.inverse().inverse()
            np.testing.assert_allclose(q.rotation, p.rotation, atol=1e-12)
            np.testing.assert_allclose(q.translation, p.translation, atol=1e-12)

    def test_inverse_compose_is_identity(self, rng):
        for _ in range(20):
            p = random_pose(rng)
            ident = p.inverse().compose(p)
            np.testing.assert_allclose(ident.rotation, np.eye(3), atol=1e-12)
            np.testing.assert_allclose(ident.translation, np.zeros(3), atol=1e-12)

    def test_compose_matches_homogeneous_matrix_oracle(self, rng):
        for _ in range(50):
            a, b = random_pose(rng), random_pose(rng)
            expected = a.matrix() @ b.matrix()
            got = a.compose(b).matrix()
            np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_apply_matches_matrix(self, rng):
        p = random_pose(rng)
        pts = rng.normal(size=(7, 3))
        hom = np.hstack([pts, np.ones((7, 1))])
        expected = (hom @ p.matrix().T)[:, :3]
        np.testing.assert_allclose(p.apply(pts), expected, atol=1e-12)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            Pose(np.eye(3), [np.nan, 0.0, 0.0])


class TestRelativeToFirst:
    def test_all_identity(self):
        traj = Trajectory([Pose.identity() for _ in range(5)])
        rel = relative_to_first(traj)
        for p in rel.poses:
            np.testing.assert_allclose(p.matrix(), np.eye(4), atol=1e-15)

    def test_first_frame_forced_identity(self, rng):
        traj = Trajectory([random_pose(rng) for _ in range(6)])
        rel = relative_to_first(traj)
        np.testing.assert_allclose(rel.poses[0].matrix(), np.eye(4), atol=1e-12)

    def test_composition_recovers_input(self, rng):
        poses = [random_pose(rng) for _ in range(10)]
        traj = Trajectory(poses)
        rel = relative_to_first(traj)
        for f in range(10):
            recovered = rel.poses[f].compose(poses[0])
            np.testing.assert_allclose(recovered.matrix(), poses[f].matrix(), atol=1e-12)

    def test_idempotent(self, rng):
        traj = Trajectory([random_pose(rng) for _ in range(8)])
        once = relative_to_first(traj)
        twice = relative_to_first(once)
        for a, b in zip(once.poses, twice.poses):
            np.testing.assert_allclose(a.matrix(), b.matrix(), atol=1e-12)


class TestRotationLog:
    def test_identity(self):
        np.testing.assert_allclose(log_so3(np.eye(3)), np.zeros(3))

    def test_z_axis_rotation(self):
        np.testing.assert_allclose(log_so3(rotation_z(0.3)), [0.0, 0.0, 0.3], atol=1e-12)

    def test_round_trip_random(self, rng):
        for _ in range(100):
            r = random_rotation(rng)
            w = log_so3(r)
            assert np.linalg.norm(w) <= math.pi + 1e-12
            np.testing.assert_allclose(exp_so3(w), r, atol=1e-9)

    def test_matches_scipy(self, rng):
        for _ in range(100):
            r = random_rotation(rng)
            expected = Rotation.from_matrix(r).as_rotvec()
            np.testing.assert_allclose(log_so3(r), expected, atol=1e-9)

    def test_near_pi(self, rng):
        for _ in range(20):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            for angle in (math.pi, math.pi - 1e-5, math.pi - 1e-8):
                r = exp_so3(axis * angle)
                w = log_so3(r)
                np.testing.assert_allclose(exp_so3(w), r, atol=1e-9)
                assert abs(np.linalg.norm(w) - angle) < 1e-6

    def test_tiny_angles(self, rng):
        for angle in (0.0, 1e-9, 1e-7):
            axis = np.array([1.0, 0.0, 0.0])
            w = log_so3(exp_so3(axis * angle))
            np.testing.assert_allclose(w, axis * angle, atol=1e-12)


class TestQuaternions:
    def test_round_trip(self, rng):
        for _ in range(50):
            r = random_rotation(rng)
            np.testing.assert_allclose(quat_to_rotation(rotation_to_quat(r)), r, atol=1e-12)

    def test_identity(self):
        np.testing.assert_allclose(rotation_to_quat(np.eye(3)), [1, 0, 0, 0])


class TestMakeMotion:
    def test_zero_pan_is_identity(self):
        traj = make_motion("pan", 0.0, 8)
        assert traj.num_frames == 8
        for p in traj.poses:
            np.testing.assert_allclose(p.matrix(), np.eye(4))

    def test_truck_magnitudes_linear(self):
        traj = make_motion("truck", 0.4, 5)
        norms = [np.linalg.norm(p.translation) for p in traj.poses]
        np.testing.assert_allclose(norms, [0.0, 0.1, 0.2, 0.3, 0.4], atol=1e-15)
        for p in traj.poses:
            np.testing.assert_array_equal(p.rotation, np.eye(3))
        # camera moves right, so scene points shift toward -x
        assert traj.poses[-1].translation[0] < 0

    def test_pure_rotation_kinds_have_zero_translation(self):
        for kind in ("pan", "tilt"):
            traj = make_motion(kind, 0.5, 6)
            for p in traj.poses:
                np.testing.assert_array_equal(p.translation, np.zeros(3))
                assert is_rotation(p.rotation)

    def test_pure_translation_kinds_have_identity_rotation(self):
        for kind in ("truck", "pedestal", "dolly", "zoom"):
            traj = make_motion(kind, 0.5, 6)
            for p in traj.poses:
                np.testing.assert_array_equal(p.rotation, np.eye(3))

    def test_pan_rotates_about_camera_y(self):
        traj = make_motion("pan", 0.3, 4)
        w = log_so3(traj.poses[-1].rotation)
        np.testing.assert_allclose(np.abs(w / np.linalg.norm(w)), [0, 1, 0], atol=1e-12)

    def test_tilt_rotates_about_camera_x(self):
        traj = make_motion("tilt", 0.3, 4)
        w = log_so3(traj.poses[-1].rotation)
        np.testing.assert_allclose(np.abs(w / np.linalg.norm(w)), [1, 0, 0], atol=1e-12)

    def test_orbit_centers_on_circle(self):
        traj = make_motion("orbit", math.pi / 2, 9, radius=2.0)
        for p in traj.poses:
            center = -p.rotation.T @ p.translation
            assert abs(np.linalg.norm(center) - 2.0) <= 1e-12
            assert abs(center[1]) <= 1e-12  # circle lies in the y = 0 plane

    def test_orbit_constant_angular_step(self):
        traj = make_motion("orbit", 1.1, 7, radius=3.0)
        centers = np.array([-p.rotation.T @ p.translation for p in traj.poses])
        angles = []
        for a, b in zip(centers[:-1], centers[1:]):
            cosang = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
            angles.append(math.acos(min(1.0, max(-1.0, cosang))))
        np.testing.assert_allclose(angles, angles[0], atol=1e-9)

    def test_orbit_aims_at_origin(self):
        traj = make_motion("arc", 0.9, 5, radius=2.5)
        for p in traj.poses:
            center = -p.rotation.T @ p.translation
            forward = p.rotation.T @ np.array([0.0, 0.0, 1.0])
            toward_origin = -center / np.linalg.norm(center)
            np.testing.assert_allclose(forward, toward_origin, atol=1e-12)

    def test_generated_rotations_are_orthonormal(self):
        for kind in ("pan", "tilt", "truck", "pedestal", "dolly", "orbit"):
            for p in make_motion(kind, 0.7, 9).poses:
                assert is_rotation(p.rotation, tol=1e-9)

    def test_single_frame(self):
        traj = make_motion("pan", 1.0, 1)
        assert traj.num_frames == 1
        np.testing.assert_allclose(traj.poses[0].matrix(), np.eye(4))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            make_motion("barrel_roll", 0.1, 5)

    def test_zero_frames_rejected(self):
        with pytest.raises(ValueError):
            make_motion("pan", 0.1, 0)


class TestIntrinsics:
    def test_defaults_are_unit_focal_zero_center(self):
        k = Intrinsics()
        np.testing.assert_array_equal(k.matrix(), np.eye(3))

    def test_nonpositive_focal_rejected(self):
        with pytest.raises(ValueError):
            Intrinsics(fx=0.0)


def test_rotation_y_convention():
    # positive pan turns the camera right: a point straight ahead moves
    # to negative x in the new camera frame
    traj = make_motion("pan", 0.2, 2)
    ahead = np.array([0.0, 0.0, 2.0])
    moved = traj.poses[-1].apply(ahead)
    assert moved[0] < 0


def test_rotation_y_matrix():
    np.testing.assert_allclose(
        rotation_y(0.5) @ rotation_y(-0.5), np.eye(3), atol=1e-15
    )
