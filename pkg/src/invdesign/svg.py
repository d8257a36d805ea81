"""Minimal self-contained SVG line plots (no plotting dependency)."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def line_plot(path, series, title="", width=640, height=360, xlabel="x"):
    """Write ``series`` = [(label, x, y), ...] as polylines sharing one frame."""
    pad = 48
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    span = y1 - y0
    y0, y1 = y0 - 0.05 * span, y1 + 0.05 * span

    def px(x):
        return pad + (np.asarray(x, float) - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (np.asarray(y, float) - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="#444"/>',
        f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle" font-size="14">'
        f"{escape(title)}</text>",
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">'
        f"{escape(xlabel)}</text>",
        f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{x0:.4g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="end" '
        f'font-size="10">{x1:.4g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end" font-size="10">{y0:.4g}</text>',
        f'<text x="{pad - 4}" y="{pad + 10}" text-anchor="end" font-size="10">{y1:.4g}</text>',
    ]
    for i, (label, x, y) in enumerate(series):
        c = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(x), py(y)))
        parts.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - pad - 4}" y="{pad + 16 + 14 * i}" text-anchor="end" '
                     f'font-size="11" fill="{c}">{escape(label)}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
    return Path(path)


def step_xy(u):
    """Corner points of a piecewise-constant profile for plotting."""
    g = u.grid
    x = np.repeat(g.nodes, 2)[1:-1]
    y = np.repeat(u.values, 2)
    return x, y
