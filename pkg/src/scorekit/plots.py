"""Self-contained SVG plots: probit-scaled DET curves and score histograms.

The SVG is generated directly (no plotting library) so that identical inputs
always produce identical bytes; batch reruns must not churn output files.
"""

from statistics import NormalDist

import numpy as np

_INV = NormalDist().inv_cdf

_DET_TICKS = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4)
_AXIS_LO, _AXIS_HI = 0.0005, 0.55

_SIZE = 560
_MARGIN = 64


def _probit(p):
    return _INV(min(max(p, _AXIS_LO), _AXIS_HI))


def _tick_label(p):
    pct = p * 100.0
    return f"{pct:g}"


class _Svg:
    def __init__(self, width, height):
        self.width = width
        self.height = height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
        ]

    def line(self, x1, y1, x2, y2, stroke="#cccccc", width=1, dash=None):
        dash = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{stroke}" stroke-width="{width}"{dash}/>'
        )

    def polyline(self, points, stroke, width=1.5):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="{width}"/>'
        )

    def rect(self, x, y, w, h, fill, opacity=1.0):
        self.parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
            f'fill="{fill}" fill-opacity="{opacity:.2f}"/>'
        )

    def text(self, x, y, s, size=12, anchor="middle", rotate=None):
        transform = ""
        if rotate is not None:
            transform = f' transform="rotate({rotate} {x:.2f} {y:.2f})"'
        self.parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" '
            f'font-size="{size}" text-anchor="{anchor}"{transform}>{s}</text>'
        )

    def render(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def det_plot_svg(curves, title="DET curve"):
    """Render DET curves on probit-warped axes.

    ``curves`` maps a legend label to a DetCurve; probabilities outside the
    plotted range are clamped to the axis limits.
    """
    svg = _Svg(_SIZE, _SIZE)
    plot = _SIZE - 2 * _MARGIN
    lo, hi = _probit(_AXIS_LO), _probit(_AXIS_HI)

    def sx(p):
        return _MARGIN + (_probit(p) - lo) / (hi - lo) * plot

    def sy(p):
        return _SIZE - _MARGIN - (_probit(p) - lo) / (hi - lo) * plot

    for p in _DET_TICKS:
        svg.line(sx(p), _MARGIN, sx(p), _SIZE - _MARGIN)
        svg.line(_MARGIN, sy(p), _SIZE - _MARGIN, sy(p))
        svg.text(sx(p), _SIZE - _MARGIN + 16, _tick_label(p), size=10)
        svg.text(_MARGIN - 8, sy(p) + 4, _tick_label(p), size=10, anchor="end")
    svg.line(_MARGIN, _MARGIN, _MARGIN, _SIZE - _MARGIN, stroke="#000000")
    svg.line(
        _MARGIN, _SIZE - _MARGIN, _SIZE - _MARGIN, _SIZE - _MARGIN,
        stroke="#000000",
    )
    # p_miss = p_fa reference diagonal
    svg.line(
        sx(_AXIS_LO), sy(_AXIS_LO), sx(_AXIS_HI), sy(_AXIS_HI),
        stroke="#999999", dash="4,4",
    )

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    for k, (label, curve) in enumerate(curves.items()):
        color = colors[k % len(colors)]
        points = [
            (sx(pf), sy(pm))
            for pf, pm in zip(curve.p_fa, curve.p_miss)
        ]
        svg.polyline(points, stroke=color)
        svg.text(_SIZE - _MARGIN - 6, _MARGIN + 16 + 16 * k, label, anchor="end")
        svg.line(
            _SIZE - _MARGIN - 90, _MARGIN + 12 + 16 * k,
            _SIZE - _MARGIN - 70, _MARGIN + 12 + 16 * k,
            stroke=color, width=2,
        )

    svg.text(_SIZE / 2, _MARGIN / 2, title, size=14)
    svg.text(_SIZE / 2, _SIZE - _MARGIN / 3, "false alarm probability (%)")
    svg.text(
        _MARGIN / 3, _SIZE / 2, "miss probability (%)", rotate=-90
    )
    return svg.render()


def histogram_svg(dist, edges, title):
    """Render one channel pair's target vs impostor score histograms."""
    svg = _Svg(_SIZE, int(_SIZE * 0.7))
    height = int(_SIZE * 0.7)
    plot_w = _SIZE - 2 * _MARGIN
    plot_h = height - 2 * _MARGIN
    top = np.max([dist.target_hist.max(initial=0),
                  dist.nontarget_hist.max(initial=0), 1])

    lo, hi = float(edges[0]), float(edges[-1])

    def sx(v):
        return _MARGIN + (v - lo) / (hi - lo) * plot_w

    def sy(c):
        return height - _MARGIN - c / top * plot_h

    for series, color in (
        (dist.nontarget_hist, "#d62728"),
        (dist.target_hist, "#1f77b4"),
    ):
        for i, count in enumerate(series):
            if count == 0:
                continue
            x0, x1 = sx(float(edges[i])), sx(float(edges[i + 1]))
            y = sy(float(count))
            svg.rect(x0, y, x1 - x0, height - _MARGIN - y, color, opacity=0.5)

    svg.line(_MARGIN, _MARGIN, _MARGIN, height - _MARGIN, stroke="#000000")
    svg.line(
        _MARGIN, height - _MARGIN, _SIZE - _MARGIN, height - _MARGIN,
        stroke="#000000",
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        svg.text(sx(v), height - _MARGIN + 16, f"{v:.3g}", size=10)
    svg.text(_MARGIN - 8, sy(float(top)) + 4, str(int(top)), size=10, anchor="end")
    svg.text(_MARGIN - 8, sy(0.0) + 4, "0", size=10, anchor="end")

    svg.rect(_SIZE - _MARGIN - 120, _MARGIN + 6, 14, 10, "#1f77b4", opacity=0.5)
    svg.text(_SIZE - _MARGIN - 100, _MARGIN + 15, "target", anchor="start", size=11)
    svg.rect(_SIZE - _MARGIN - 120, _MARGIN + 24, 14, 10, "#d62728", opacity=0.5)
    svg.text(_SIZE - _MARGIN - 100, _MARGIN + 33, "impostor", anchor="start", size=11)

    svg.text(_SIZE / 2, _MARGIN / 2, title, size=14)
    svg.text(_SIZE / 2, height - _MARGIN / 3, "score")
    return svg.render()
