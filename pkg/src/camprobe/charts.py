"""Dependency-free SVG rendering of control-scale sweep curves.

One chart shows, per motion kind, dynamics (solid, left axis) and quality
(dashed, right axis) against the control scale, mirroring the usual
motion-strength-versus-quality trade-off plot.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

__all__ = ["probe_curves_svg"]

_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
)

_MARGIN_LEFT = 64
_MARGIN_RIGHT = 64
_MARGIN_TOP = 44
_MARGIN_BOTTOM = 72


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def probe_curves_svg(curves, width: int = 760, height: int = 420, title: str = "Control scale sweep") -> str:
    """Render sweep curves as an SVG document string.

    ``curves`` is a list of {"motion": str, "points": [{"scale", "dynamics",
    "quality"}, ...]} entries, the shape emitted by the probe command.
    """
    if not curves:
        raise ValueError("no curves to plot")
    scales = [p["scale"] for c in curves for p in c["points"]]
    dyn = [p["dynamics"] for c in curves for p in c["points"]]
    qual = [p["quality"] for c in curves for p in c["points"]]
    if not scales:
        raise ValueError("curves contain no points")
    x_lo, x_hi = min(scales), max(scales)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    d_lo, d_hi = 0.0, max(dyn) or 1.0
    q_lo, q_hi = min(qual), max(qual)
    if q_hi <= q_lo:
        q_hi = q_lo + 1.0

    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(x):
        return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy_d(y):
        return _MARGIN_TOP + (1.0 - (y - d_lo) / (d_hi - d_lo)) * plot_h

    def sy_q(y):
        return _MARGIN_TOP + (1.0 - (y - q_lo) / (q_hi - q_lo)) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15" font-weight="bold">{escape(title)}</text>',
    ]

    # frame and ticks
    x0, y0 = _MARGIN_LEFT, _MARGIN_TOP
    x1, y1 = _MARGIN_LEFT + plot_w, _MARGIN_TOP + plot_h
    parts.append(
        f'<rect x="{x0}" y="{y0}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#444" stroke-width="1"/>'
    )
    for t in _ticks(x_lo, x_hi):
        px = sx(t)
        parts.append(
            f'<line x1="{px:.1f}" y1="{y1}" x2="{px:.1f}" y2="{y1 + 5}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{px:.1f}" y="{y1 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    for t in _ticks(d_lo, d_hi):
        py = sy_d(t)
        parts.append(
            f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    for t in _ticks(q_lo, q_hi):
        py = sy_q(t)
        parts.append(
            f'<line x1="{x1}" y1="{py:.1f}" x2="{x1 + 5}" y2="{py:.1f}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{x1 + 8}" y="{py + 4:.1f}" text-anchor="start" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )

    # axis titles
    parts.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{y1 + 36}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">control scale</text>'
    )
    parts.append(
        f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">dynamics proxy</text>'
    )
    parts.append(
        f'<text x="{width - 14}" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(90 {width - 14} {(y0 + y1) / 2:.1f})">quality proxy (dB)</text>'
    )

    for i, curve in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        pts = sorted(curve["points"], key=lambda p: p["scale"])
        dyn_path = " ".join(f"{sx(p['scale']):.2f},{sy_d(p['dynamics']):.2f}" for p in pts)
        qual_path = " ".join(f"{sx(p['scale']):.2f},{sy_q(p['quality']):.2f}" for p in pts)
        parts.append(
            f'<polyline points="{dyn_path}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<polyline points="{qual_path}" fill="none" stroke="{color}" '
            f'stroke-width="2" stroke-dasharray="6 4"/>'
        )
        for p in pts:
            parts.append(
                f'<circle cx="{sx(p["scale"]):.2f}" cy="{sy_d(p["dynamics"]):.2f}" '
                f'r="2.6" fill="{color}"/>'
            )

    # legend: one swatch per motion plus the line-style key
    lx = x0 + 10
    ly = y1 + 48
    for i, curve in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="3"/>'
        )
        parts.append(
            f'<text x="{lx + 27}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{escape(str(curve["motion"]))}</text>'
        )
        lx += 36 + 7 * len(str(curve["motion"]))
    parts.append(
        f'<text x="{x1 - 4}" y="{ly}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">solid: dynamics, dashed: quality</text>'
    )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
