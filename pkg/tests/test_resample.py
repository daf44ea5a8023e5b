"""Resampler tests: exact integer-shift behavior, linearity and convexity
properties, and analytic gradients checked against central finite
differences away from the interpolation knots."""

import numpy as np
import pytest

from camprobe.displacement import DisplacementField, pixel_center_grid
from camprobe.resample import grid_sample, grid_sample_grad


def _field(offsets, valid=None, direction="backward"):
    offsets = np.asarray(offsets, dtype=float)
    if valid is None:
        valid = np.ones(offsets.shape[:2], dtype=bool)
    return DisplacementField(offsets, valid, direction)


def _random_field(rng, h, w, scale=0.3, knot_margin=1e-3):
    """Random field whose sample locations stay away from integer pixels
    and the border, where bilinear interpolation is non-differentiable."""
    while True:
        offsets = rng.uniform(-scale, scale, size=(h, w, 2))
        grid = pixel_center_grid(h, w)
        pos = grid + offsets
        x = ((pos[..., 0] + 1.0) * w - 1.0) / 2.0
        y = ((pos[..., 1] + 1.0) * h - 1.0) / 2.0
        near_knot = (
            (np.abs(x - np.round(x)) < knot_margin)
            | (np.abs(y - np.round(y)) < knot_margin)
            | (x < 0.5)
            | (x > w - 1.5)
            | (y < 0.5)
            | (y > h - 1.5)
        )
        if not near_knot.any():
            return _field(offsets)


class TestGridSample:
    def test_zero_field_is_identity(self, rng):
        frame = rng.uniform(0, 1, size=(6, 9, 3))
        out = grid_sample(frame, _field(np.zeros((6, 9, 2))))
        np.testing.assert_array_equal(out, frame)

    def test_constant_frame_unchanged(self, rng):
        frame = np.full((7, 8, 2), 0.37)
        fld = _field(rng.uniform(-0.5, 0.5, size=(7, 8, 2)))
        np.testing.assert_allclose(grid_sample(frame, fld), 0.37, atol=1e-14)

    def test_integer_one_pixel_shift_matches_column_shift(self, rng):
        h, w = 6, 10
        frame = rng.uniform(0, 1, size=(h, w, 2))
        # +1 pixel in x is 2/w in normalized units: sample from the right
        fld = _field(np.stack([np.full((h, w), 2.0 / w), np.zeros((h, w))], axis=-1))
        out = grid_sample(frame, fld)
        expected = np.concatenate([frame[:, 1:], frame[:, -1:]], axis=1)
        np.testing.assert_array_equal(out, expected)

    def test_out_of_range_clamps_to_border(self, rng):
        h, w = 5, 5
        frame = rng.uniform(0, 1, size=(h, w, 1))
        fld = _field(np.stack([np.full((h, w), 10.0), np.zeros((h, w))], axis=-1))
        out = grid_sample(frame, fld)
        np.testing.assert_array_equal(out, np.repeat(frame[:, -1:], w, axis=1))

    def test_invalid_cells_copy_input(self, rng):
        h, w = 6, 6
        frame = rng.uniform(0, 1, size=(h, w, 3))
        offsets = rng.uniform(-0.4, 0.4, size=(h, w, 2))
        valid = rng.uniform(size=(h, w)) > 0.5
        out = grid_sample(frame, _field(offsets, valid))
        np.testing.assert_array_equal(out[~valid], frame[~valid])

    def test_linear_in_frame(self, rng):
        h, w = 8, 8
        a = rng.uniform(0, 1, size=(h, w, 2))
        b = rng.uniform(0, 1, size=(h, w, 2))
        fld = _field(rng.uniform(-0.5, 0.5, size=(h, w, 2)))
        lhs = grid_sample(2.0 * a + 0.5 * b, fld)
        rhs = 2.0 * grid_sample(a, fld) + 0.5 * grid_sample(b, fld)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_output_within_input_range(self, rng):
        for _ in range(20):
            frame = rng.uniform(-3, 3, size=(7, 9, 2))
            fld = _field(rng.uniform(-1.5, 1.5, size=(7, 9, 2)))
            out = grid_sample(frame, fld)
            assert out.min() >= frame.min() - 1e-12
            assert out.max() <= frame.max() + 1e-12

    def test_shape_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            grid_sample(rng.uniform(size=(5, 5, 1)), _field(np.zeros((4, 5, 2))))


class TestGridSampleGrad:
    def test_zero_field_frame_gradient_is_identity_away_from_borders(self):
        h, w = 6, 8
        frame = np.linspace(0, 1, h * w).reshape(h, w, 1)
        d_frame, _ = grid_sample_grad(frame, _field(np.zeros((h, w, 2))), np.ones((h, w, 1)))
        np.testing.assert_allclose(d_frame[1:-1, 1:-1], 1.0, atol=1e-12)

    def test_constant_frame_zero_field_gradient(self, rng):
        h, w = 7, 7
        frame = np.full((h, w, 3), 0.5)
        fld = _random_field(rng, h, w)
        _, d_off = grid_sample_grad(frame, fld, rng.uniform(size=(h, w, 3)))
        np.testing.assert_allclose(d_off, 0.0, atol=1e-12)

    def test_invalid_cells_pass_gradient_to_frame(self, rng):
        h, w = 5, 5
        frame = rng.uniform(size=(h, w, 1))
        upstream = rng.uniform(size=(h, w, 1))
        valid = np.zeros((h, w), dtype=bool)
        d_frame, d_off = grid_sample_grad(
            frame, _field(rng.uniform(-0.3, 0.3, size=(h, w, 2)), valid), upstream
        )
        np.testing.assert_array_equal(d_frame, upstream)
        np.testing.assert_array_equal(d_off, 0.0)

    @pytest.mark.parametrize("case", range(10))
    def test_matches_central_finite_differences(self, case):
        rng = np.random.default_rng(900 + case)
        h, w, c = 8, 8, 2
        frame = rng.uniform(0, 1, size=(h, w, c))
        fld = _random_field(rng, h, w)
        upstream = rng.uniform(-1, 1, size=(h, w, c))

        d_frame, d_off = grid_sample_grad(frame, fld, upstream)

        def loss(fr, off):
            return float(np.sum(grid_sample(fr, _field(off, fld.valid)) * upstream))

        step = 1e-5
        # probe a subset of coordinates of both inputs
        for idx in [(1, 2, 0), (4, 4, 1), (6, 3, 0), (2, 7, 1)]:
            plus = frame.copy()
            plus[idx] += step
            minus = frame.copy()
            minus[idx] -= step
            fd = (loss(plus, fld.offsets) - loss(minus, fld.offsets)) / (2 * step)
            scale = max(abs(fd), abs(d_frame[idx]), 1e-8)
            assert abs(fd - d_frame[idx]) / scale <= 1e-4

        for idx in [(0, 0, 0), (3, 5, 1), (5, 2, 0), (7, 7, 1), (4, 1, 1)]:
            plus = fld.offsets.copy()
            plus[idx] += step
            minus = fld.offsets.copy()
            minus[idx] -= step
            fd = (loss(frame, plus) - loss(frame, minus)) / (2 * step)
            scale = max(abs(fd), abs(d_off[idx]), 1e-8)
            assert abs(fd - d_off[idx]) / scale <= 1e-4
