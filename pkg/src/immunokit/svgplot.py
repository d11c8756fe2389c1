"""Minimal SVG line plots: polylines, axes, tick labels, legend.

No plotting dependency; output is deterministic text, good enough for
dose-response and trajectory figures.
"""

from __future__ import annotations

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_WIDTH, _HEIGHT = 640, 440
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 40, 50


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return list(np.linspace(lo, hi, count))


def svg_line_plot(series: list[tuple[str, list, list]], title: str = "",
                  xlabel: str = "", ylabel: str = "", log_x: bool = False) -> str:
    """series: (label, xs, ys) triples sharing one coordinate frame."""
    if not series:
        raise ValueError("no series to plot")
    all_x, all_y = [], []
    for _, xs, ys in series:
        xs = np.asarray(xs, dtype=np.float64)
        if log_x:
            if np.any(xs <= 0):
                raise ValueError("log_x requires positive x values")
            xs = np.log10(xs)
        all_x.append(xs)
        all_y.append(np.asarray(ys, dtype=np.float64))
    x_lo = min(x.min() for x in all_x)
    x_hi = max(x.max() for x in all_x)
    y_lo = min(y.min() for y in all_y)
    y_hi = max(y.max() for y in all_y)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x):
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return _MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2}" y="24" text-anchor="middle" font-size="15" '
        f'font-family="sans-serif">{title}</text>',
    ]
    # axes
    x0, y0 = _MARGIN_L, _MARGIN_T + plot_h
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + plot_w}" y2="{y0}" stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{_MARGIN_T}" x2="{x0}" y2="{y0}" stroke="black"/>')
    for tx in _ticks(x_lo, x_hi):
        x = px(tx)
        label = _fmt(10 ** tx) if log_x else _fmt(tx)
        parts.append(f'<line x1="{_fmt(x)}" y1="{y0}" x2="{_fmt(x)}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{y0 + 20}" text-anchor="middle" font-size="11" '
                     f'font-family="sans-serif">{label}</text>')
    for ty in _ticks(y_lo, y_hi):
        y = py(ty)
        parts.append(f'<line x1="{x0 - 5}" y1="{_fmt(y)}" x2="{x0}" y2="{_fmt(y)}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 8}" y="{_fmt(y + 4)}" text-anchor="end" font-size="11" '
                     f'font-family="sans-serif">{_fmt(ty)}</text>')
    parts.append(f'<text x="{_MARGIN_L + plot_w / 2}" y="{_HEIGHT - 12}" text-anchor="middle" '
                 f'font-size="13" font-family="sans-serif">{xlabel}</text>')
    parts.append(f'<text x="18" y="{_MARGIN_T + plot_h / 2}" text-anchor="middle" font-size="13" '
                 f'font-family="sans-serif" transform="rotate(-90 18 {_MARGIN_T + plot_h / 2})">'
                 f'{ylabel}</text>')
    # series
    for i, ((label, _, _), xs, ys) in enumerate(zip(series, all_x, all_y)):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _MARGIN_T + 16 + 16 * i
        lx = _MARGIN_L + plot_w - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{lx + 30}" y="{ly}" font-size="12" '
                     f'font-family="sans-serif">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
