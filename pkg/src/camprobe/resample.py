"""Differentiable bilinear grid sampling driven by displacement fields.

``grid_sample`` reads each output pixel from the input frame at the pixel's
own position plus the field offset (backward warping).  Sample locations
outside the frame clamp to the border (edge replication), and pixels the
field flags invalid copy the input value through unchanged.
``grid_sample_grad`` returns the exact gradients of the inner product
<output, upstream> with respect to the frame and the field offsets.
"""

from __future__ import annotations

import numpy as np

from .displacement import DisplacementField, pixel_center_grid

__all__ = ["grid_sample", "grid_sample_grad"]


def _sample_geometry(frame: np.ndarray, field: DisplacementField):
    """Shared corner indices and weights for sampling and its gradient."""
    h, w = frame.shape[:2]
    if field.shape != (h, w):
        raise ValueError(
            f"field grid {field.shape} does not match frame grid {(h, w)}"
        )
    pos = pixel_center_grid(h, w) + field.offsets
    # normalized [-1, 1] to pixel coordinates under the pixel-center rule
    x = ((pos[..., 0] + 1.0) * w - 1.0) / 2.0
    y = ((pos[..., 1] + 1.0) * h - 1.0) / 2.0
    # gradient of the clamp: zero once the raw location leaves the frame
    in_x = (x > 0.0) & (x < w - 1.0)
    in_y = (y > 0.0) & (y < h - 1.0)
    xc = np.clip(x, 0.0, w - 1.0)
    yc = np.clip(y, 0.0, h - 1.0)
    x0 = np.floor(xc).astype(int)
    y0 = np.floor(yc).astype(int)
    x0 = np.minimum(x0, w - 1)
    y0 = np.minimum(y0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = xc - x0
    wy = yc - y0
    return x0, x1, y0, y1, wx, wy, in_x, in_y


def grid_sample(frame: np.ndarray, field: DisplacementField) -> np.ndarray:
    """Warp an (H, W, C) frame by a backward displacement field."""
    frame = np.asarray(frame, dtype=float)
    x0, x1, y0, y1, wx, wy, _, _ = _sample_geometry(frame, field)
    wx = wx[..., None]
    wy = wy[..., None]
    out = (
        frame[y0, x0] * (1 - wy) * (1 - wx)
        + frame[y0, x1] * (1 - wy) * wx
        + frame[y1, x0] * wy * (1 - wx)
        + frame[y1, x1] * wy * wx
    )
    out[~field.valid] = frame[~field.valid]
    return out


def grid_sample_grad(
    frame: np.ndarray, field: DisplacementField, upstream: np.ndarray
):
    """Gradients of <grid_sample(frame, field), upstream>.

    Returns ``(d_frame, d_offsets)`` with ``d_frame`` shaped like the frame
    and ``d_offsets`` shaped (H, W, 2) like the field offsets.  Offsets are
    measured in normalized coordinates, so the chain rule carries the
    W/2 and H/2 pixel-per-unit factors; clamped locations and invalid
    pixels get zero offset gradient, and invalid pixels pass their
    upstream gradient straight to the frame.
    """
    frame = np.asarray(frame, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != frame.shape:
        raise ValueError("upstream gradient must match the frame shape")
    h, w = frame.shape[:2]
    x0, x1, y0, y1, wx, wy, in_x, in_y = _sample_geometry(frame, field)
    valid = field.valid
    up = np.where(valid[..., None], upstream, 0.0)
    wxc = wx[..., None]
    wyc = wy[..., None]

    d_frame = np.zeros_like(frame)
    flat = lambda a: a.reshape(-1, frame.shape[2])
    idx = lambda ys, xs: (ys.ravel(), xs.ravel())
    np.add.at(d_frame, idx(y0, x0), flat(up * (1 - wyc) * (1 - wxc)))
    np.add.at(d_frame, idx(y0, x1), flat(up * (1 - wyc) * wxc))
    np.add.at(d_frame, idx(y1, x0), flat(up * wyc * (1 - wxc)))
    np.add.at(d_frame, idx(y1, x1), flat(up * wyc * wxc))
    # invalid pixels copy the input, an identity map
    d_frame[~valid] += upstream[~valid]

    d_out_dx = (frame[y0, x1] - frame[y0, x0]) * (1 - wyc) + (
        frame[y1, x1] - frame[y1, x0]
    ) * wyc
    d_out_dy = (frame[y1, x0] - frame[y0, x0]) * (1 - wxc) + (
        frame[y1, x1] - frame[y0, x1]
    ) * wxc
    du = np.sum(up * d_out_dx, axis=-1) * (w / 2.0) * in_x
    dv = np.sum(up * d_out_dy, axis=-1) * (h / 2.0) * in_y
    d_offsets = np.stack([du * valid, dv * valid], axis=-1)
    return d_frame, d_offsets
