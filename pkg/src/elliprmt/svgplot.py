"""Minimal self-contained SVG charts (no external renderer).

Two chart types cover the simulation outputs: histogram panels with an
optional Gaussian overlay curve, and line/scatter panels for sweep tables.
Everything is plain string generation so the CLI stays dependency-free.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

__all__ = ["svg_histogram", "svg_xy"]

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 60, 20, 36, 46
_PW, _PH = _W - _ML - _MR, _H - _MT - _MB


def _axes(x_lo, x_hi, y_lo, y_hi, title, xlabel, ylabel):
    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * _PW

    def sy(y):
        return _MT + _PH - (y - y_lo) / (y_hi - y_lo) * _PH

    parts = []
    parts.append(f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT + _PH}" x2="{_ML + _PW}" '
                 f'y2="{_MT + _PH}" stroke="black"/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + _PH}" '
                 f'stroke="black"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        parts.append(f'<text x="{sx(xv):.1f}" y="{_MT + _PH + 18}" font-size="11" '
                     f'text-anchor="middle">{xv:.4g}</text>')
        parts.append(f'<text x="{_ML - 6}" y="{sy(yv) + 4:.1f}" font-size="11" '
                     f'text-anchor="end">{yv:.4g}</text>')
    parts.append(f'<text x="{_W / 2}" y="{_H - 8}" font-size="12" '
                 f'text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="14" y="{_MT + _PH / 2}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 14 {_MT + _PH / 2})">{ylabel}</text>')
    if title:
        parts.append(f'<text x="{_W / 2}" y="20" font-size="13" '
                     f'text-anchor="middle">{title}</text>')
    return parts, sx, sy


def _document(parts) -> str:
    body = "\n".join(parts)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">\n{body}\n</svg>\n')


def svg_histogram(bin_left, bin_right, count, gauss_density=None,
                  title: str = "", xlabel: str = "value",
                  ylabel: str = "density") -> str:
    """Histogram normalized to a density, with optional Gaussian overlay."""
    bin_left = np.asarray(bin_left, dtype=np.float64)
    bin_right = np.asarray(bin_right, dtype=np.float64)
    count = np.asarray(count, dtype=np.float64)
    if bin_left.size == 0:
        raise ConfigError("histogram has no bins")
    widths = bin_right - bin_left
    total = float(count.sum())
    dens = count / (total * widths) if total > 0 else count
    y_hi = float(dens.max()) if dens.max() > 0 else 1.0
    if gauss_density is not None:
        gauss_density = np.asarray(gauss_density, dtype=np.float64)
        y_hi = max(y_hi, float(gauss_density.max()))
    parts, sx, sy = _axes(float(bin_left[0]), float(bin_right[-1]),
                          0.0, 1.05 * y_hi, title, xlabel, ylabel)
    for le, ri, d in zip(bin_left, bin_right, dens):
        x0, x1 = sx(le), sx(ri)
        y0 = sy(d)
        parts.append(f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" '
                     f'height="{_MT + _PH - y0:.2f}" fill="#7fa8d9" '
                     f'stroke="#3d6ea5" stroke-width="0.5"/>')
    if gauss_density is not None:
        centers = 0.5 * (bin_left + bin_right)
        pts = " ".join(f"{sx(x):.2f},{sy(g):.2f}"
                       for x, g in zip(centers, gauss_density))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="black" '
                     f'stroke-width="1.5"/>')
    return _document(parts)


def svg_xy(x, series: dict, title: str = "", xlabel: str = "x",
           ylabel: str = "y", scatter: bool = True) -> str:
    """Line/scatter chart of one or more series over a shared x column."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0 or not series:
        raise ConfigError("xy plot needs at least one point and one series")
    ys = {k: np.asarray(v, dtype=np.float64) for k, v in series.items()}
    y_all = np.concatenate(list(ys.values()))
    y_lo, y_hi = float(y_all.min()), float(y_all.max())
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    parts, sx, sy = _axes(x_lo, x_hi, y_lo - pad, y_hi + pad, title, xlabel, ylabel)
    colors = ["#d9534f", "#3d6ea5", "#5cb85c", "#f0ad4e", "#7b4fd9"]
    for idx, (name, y) in enumerate(ys.items()):
        color = colors[idx % len(colors)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.2"/>')
        if scatter:
            for a, b in zip(x, y):
                parts.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" '
                             f'fill="{color}"/>')
        parts.append(f'<text x="{_ML + _PW - 6}" y="{_MT + 14 + 14 * idx}" '
                     f'font-size="11" text-anchor="end" fill="{color}">{name}</text>')
    return _document(parts)
