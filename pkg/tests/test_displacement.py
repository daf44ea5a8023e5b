"""Displacement-field tests: lift/project round trips, a homogeneous
projection-matrix oracle, closed-form fields for simple motions, the
constant-depth homography equivalence, and depth normalization."""

import numpy as np
import pytest

from camprobe.displacement import (
    backward_field,
    displacement_field,
    lift,
    normalize_depth,
    pixel_center_grid,
    resize_bilinear,
    transform_project,
)
from camprobe.geometry import Intrinsics, Pose, rotation_z

from conftest import random_pose


class TestLift:
    def test_principal_ray(self):
        p = lift(np.array([0.0, 0.0]), 1.0, Intrinsics())
        np.testing.assert_allclose(p, [0.0, 0.0, 1.0])

    def test_direct_arithmetic(self):
        p = lift(np.array([0.5, -0.5]), 2.0, Intrinsics())
        np.testing.assert_allclose(p, [1.0, -1.0, 2.0])

    def test_nonpositive_depth_rejected(self):
        with pytest.raises(ValueError):
            lift(np.array([0.0, 0.0]), 0.0, Intrinsics())

    def test_project_inverts_lift(self, rng):
        k = Intrinsics(fx=1.3, fy=0.8, cx=0.05, cy=-0.1)
        for _ in range(100):
            uv = rng.uniform(-1, 1, size=2)
            d = rng.uniform(0.1, 10.0)
            p = lift(uv, d, k)
            uv2, valid = transform_project(p, Pose.identity(), k)
            assert valid
            np.testing.assert_allclose(uv2, uv, atol=1e-12)


class TestTransformProject:
    def test_identity_on_axis(self):
        uv, valid = transform_project(np.array([0.0, 0.0, 1.0]), Pose.identity(), Intrinsics())
        assert valid
        np.testing.assert_allclose(uv, [0.0, 0.0])

    def test_pure_translation_shift(self):
        pose = Pose(np.eye(3), [0.1, 0.0, 0.0])
        uv, valid = transform_project(np.array([0.3, -0.2, 1.0]), pose, Intrinsics())
        assert valid
        np.testing.assert_allclose(uv, [0.4, -0.2], atol=1e-15)

    def test_matches_projection_matrix_oracle(self, rng):
        k = Intrinsics(fx=1.1, fy=0.9, cx=0.02, cy=0.03)
        for _ in range(100):
            pose = random_pose(rng, t_scale=0.5)
            point = rng.uniform(-1, 1, size=3) + [0, 0, 3.0]
            # oracle: homogeneous 3x4 projection K [R | t]
            pmat = k.matrix() @ np.hstack([pose.rotation, pose.translation[:, None]])
            hom = pmat @ np.append(point, 1.0)
            if hom[2] <= 1e-6:
                continue
            expected = hom[:2] / hom[2]
            uv, valid = transform_project(point, pose, k)
            assert valid
            np.testing.assert_allclose(uv, expected, atol=1e-12)

    def test_point_behind_camera_flagged(self):
        uv, valid = transform_project(np.array([0.0, 0.0, -1.0]), Pose.identity(), Intrinsics())
        assert not valid
        np.testing.assert_array_equal(uv, [0.0, 0.0])


class TestDisplacementField:
    def test_identity_pose_zero_field(self, rng):
        depth = rng.uniform(0.5, 5.0, size=(12, 16))
        fld = displacement_field(depth, Pose.identity())
        assert fld.direction == "forward"
        assert fld.valid.all()
        np.testing.assert_allclose(fld.offsets, 0.0, atol=1e-15)

    def test_constant_depth_translation_is_uniform(self):
        d = 2.0
        tx = 0.3
        fld = displacement_field(np.full((8, 10), d), Pose(np.eye(3), [tx, 0, 0]))
        np.testing.assert_allclose(fld.offsets[..., 0], tx / d, atol=1e-14)
        np.testing.assert_allclose(fld.offsets[..., 1], 0.0, atol=1e-14)

    def test_in_plane_rotation_matches_2d_rotation_oracle(self):
        # a camera roll about the optical axis rotates the image plane;
        # with constant depth the field must equal rot2d(grid) - grid
        theta = 0.2
        h, w = 9, 11
        depth = np.full((h, w), 3.0)
        fld = displacement_field(depth, Pose(rotation_z(theta), np.zeros(3)))
        grid = pixel_center_grid(h, w)
        c, s = np.cos(theta), np.sin(theta)
        rot2d = np.stack(
            [c * grid[..., 0] - s * grid[..., 1], s * grid[..., 0] + c * grid[..., 1]],
            axis=-1,
        )
        np.testing.assert_allclose(fld.offsets, rot2d - grid, atol=1e-12)

    def test_projective_scale_invariance(self, rng):
        depth = rng.uniform(1.0, 4.0, size=(10, 14))
        pose = random_pose(rng, t_scale=0.2)
        fld1 = displacement_field(depth, pose)
        k = 3.7
        fld2 = displacement_field(k * depth, Pose(pose.rotation, k * pose.translation))
        np.testing.assert_allclose(fld2.offsets, fld1.offsets, atol=1e-12)
        np.testing.assert_array_equal(fld2.valid, fld1.valid)

    def test_constant_depth_equals_homography_field(self, rng):
        # with constant depth the warp collapses to the homography
        # H = K (R + t n^T / d) K^-1, n = (0, 0, 1)
        h, w = 12, 16
        d = 2.5
        k = Intrinsics(fx=1.2, fy=0.9, cx=0.04, cy=-0.02)
        for _ in range(10):
            pose = random_pose(rng, t_scale=0.2)
            fld = displacement_field(np.full((h, w), d), pose, k)
            n = np.array([0.0, 0.0, 1.0])
            hom = k.matrix() @ (pose.rotation + np.outer(pose.translation, n) / d) @ np.linalg.inv(k.matrix())
            grid = pixel_center_grid(h, w)
            ones = np.ones(grid.shape[:2] + (1,))
            src = np.concatenate([grid, ones], axis=-1)
            mapped = src @ hom.T
            expected = mapped[..., :2] / mapped[..., 2:3]
            np.testing.assert_allclose(
                fld.offsets[fld.valid], (expected - grid)[fld.valid], atol=1e-9
            )

    def test_behind_camera_pixels_flagged_invalid(self):
        # dolly far past the scene content: depth 1 with forward motion 2
        fld = displacement_field(np.full((6, 6), 1.0), Pose(np.eye(3), [0, 0, -2.0]))
        assert not fld.valid.any()
        np.testing.assert_array_equal(fld.offsets, 0.0)


class TestBackwardField:
    def test_identity_pose_zero_field(self):
        fld = backward_field(np.full((7, 9), 2.0), Pose.identity())
        assert fld.direction == "backward"
        np.testing.assert_allclose(fld.offsets, 0.0, atol=1e-15)

    def test_pure_translation_negates_forward(self, rng):
        depth = np.full((8, 12), 2.0)
        pose = Pose(np.eye(3), [0.2, -0.1, 0.0])
        fwd = displacement_field(depth, pose)
        bwd = backward_field(depth, pose)
        np.testing.assert_allclose(bwd.offsets, -fwd.offsets, atol=1e-13)


class TestNormalizeDepth:
    def test_constant_mode_all_ones(self, rng):
        depths = [rng.uniform(0.5, 3.0, size=(5, 6)) for _ in range(3)]
        out = normalize_depth(depths, "constant")
        for d in out:
            np.testing.assert_array_equal(d, 1.0)

    def test_per_frame_unit_median(self, rng):
        frame = rng.uniform(1.0, 3.0, size=(9, 9))
        frame *= 2.0 / np.median(frame)
        (out,) = normalize_depth([frame], "per_frame")
        assert abs(np.median(out) - 1.0) <= 1e-12

    def test_sequence_mode_scales_by_first_median(self):
        a = np.full((4, 4), 2.0)
        b = np.full((4, 4), 4.0)
        out = normalize_depth([a, b], "sequence")
        assert np.median(out[0]) == pytest.approx(1.0)
        assert np.median(out[1]) == pytest.approx(2.0)

    def test_raw_mode_unchanged(self, rng):
        depths = [rng.uniform(0.5, 3.0, size=(5, 6))]
        out = normalize_depth(depths, "raw")
        np.testing.assert_array_equal(out[0], depths[0])

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            normalize_depth([], "raw")

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            normalize_depth([np.ones((2, 2))], "median")


class TestResize:
    def test_constant_preserved(self):
        out = resize_bilinear(np.full((5, 7), 3.3), 11, 13)
        np.testing.assert_allclose(out, 3.3)

    def test_identity_resize(self, rng):
        src = rng.uniform(0, 1, size=(6, 8))
        np.testing.assert_allclose(resize_bilinear(src, 6, 8), src, atol=1e-14)

    def test_linear_ramp_preserved_on_upsample(self):
        # a bilinear ramp is reproduced exactly away from the borders
        src = np.outer(np.arange(8.0), np.ones(10)) + np.arange(10.0)
        out = resize_bilinear(src, 16, 20)
        expected_col = (2.0 * np.arange(16) + 1.0) * 8 / 32.0 - 0.5
        inner = slice(2, -2)
        np.testing.assert_allclose(
            out[inner, 10], expected_col[inner] + ((2 * 10 + 1) * 10 / 40.0 - 0.5), atol=1e-12
        )
