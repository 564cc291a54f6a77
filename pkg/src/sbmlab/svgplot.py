"""Minimal self-contained SVG output: log-log line plots and regime heatmaps.

No plotting runtime; the harness writes these files directly.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["heatmap_svg", "line_plot_svg"]

_W, _H, _PAD = 640, 440, 56


def _scale(vals, lo, hi, out_lo, out_hi):
    vals = np.asarray(vals, dtype=float)
    span = hi - lo if hi > lo else 1.0
    return out_lo + (vals - lo) / span * (out_hi - out_lo)


def line_plot_svg(path, xs, series: dict, title: str = "",
                  logx: bool = True, logy: bool = True) -> None:
    """Write a line plot; ``series`` maps labels to y arrays."""
    xs = np.asarray(xs, dtype=float)
    fx = np.log10(xs) if logx else xs
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W//2}" y="20" text-anchor="middle" '
             f'font-size="14">{title}</text>']
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    all_y = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    all_y = all_y[np.isfinite(all_y) & (all_y > 0 if logy else np.isfinite(all_y))]
    fy_all = np.log10(all_y) if logy else all_y
    ylo, yhi = float(fy_all.min()), float(fy_all.max())
    xlo, xhi = float(fx.min()), float(fx.max())
    for k, (label, ys) in enumerate(series.items()):
        ys = np.asarray(ys, dtype=float)
        mask = np.isfinite(ys) & ((ys > 0) if logy else True)
        fy = np.log10(ys[mask]) if logy else ys[mask]
        px = _scale(fx[mask], xlo, xhi, _PAD, _W - _PAD)
        py = _scale(fy, ylo, yhi, _H - _PAD, _PAD)
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(px, py))
        color = colors[k % len(colors)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        parts.append(f'<text x="{_W - _PAD + 4}" y="{_PAD + 16 * k}" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append(f'<line x1="{_PAD}" y1="{_H-_PAD}" x2="{_W-_PAD}" '
                 f'y2="{_H-_PAD}" stroke="black"/>')
    parts.append(f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H-_PAD}" '
                 f'stroke="black"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


_REGIME_COLORS = {
    "cap": "#4575b4",
    "gauss": "#fee090",
    "jump": "#d73027",
    "mixed": "#bdbdbd",
}


def heatmap_svg(path, ts, rs, values, title: str = "",
                categorical: bool = False) -> None:
    """Cell map over a log-log (t, r) grid.

    ``values`` is either a float array (colored by log-ratio) or an object
    array of regime labels when ``categorical``.
    """
    ts = np.asarray(ts, dtype=float)
    rs = np.asarray(rs, dtype=float)
    n_t, n_r = len(ts), len(rs)
    cw = (_W - 2 * _PAD) / n_r
    ch = (_H - 2 * _PAD) / n_t
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W//2}" y="20" text-anchor="middle" '
             f'font-size="14">{title}</text>']
    if not categorical:
        vals = np.asarray(values, dtype=float)
        with np.errstate(divide="ignore"):
            lv = np.log10(np.where(vals > 0, vals, np.nan))
        finite = lv[np.isfinite(lv)]
        lo = float(finite.min()) if len(finite) else -1.0
        hi = float(finite.max()) if len(finite) else 1.0
    for i in range(n_t):
        for j in range(n_r):
            x = _PAD + j * cw
            y = _H - _PAD - (i + 1) * ch
            if categorical:
                color = _REGIME_COLORS.get(str(values[i, j]), "#ffffff")
            else:
                v = values[i, j]
                if not (np.isfinite(v) and v > 0):
                    color = "#ffffff"
                else:
                    z = (math.log10(v) - lo) / (hi - lo) if hi > lo else 0.5
                    red = int(255 * z)
                    blue = int(255 * (1.0 - z))
                    color = f"rgb({red},{80},{blue})"
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw:.1f}" '
                         f'height="{ch:.1f}" fill="{color}"/>')
    parts.append(f'<text x="{_W//2}" y="{_H-12}" text-anchor="middle" '
                 f'font-size="12">r (log cells)</text>')
    parts.append(f'<text x="16" y="{_H//2}" font-size="12" '
                 f'transform="rotate(-90 16 {_H//2})">t (log cells)</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
