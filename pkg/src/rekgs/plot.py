"""Minimal standalone SVG line charts with a log-scaled y axis.

Each data curve becomes exactly one ``<polyline class="curve">``; axes,
ticks and legend swatches use ``<line>``/``<text>`` only, so the number of
plotted curves can be read back by counting polylines.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 200, 40, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")


def log_range(curves: Sequence[np.ndarray]) -> tuple[float, float]:
    pos = np.concatenate([c[np.isfinite(c) & (c > 0)] for c in curves] or [np.array([])])
    if pos.size == 0:
        return 0.1, 10.0
    lo = 10.0 ** math.floor(math.log10(pos.min()))
    hi = 10.0 ** math.ceil(math.log10(pos.max()))
    if hi <= lo:
        hi = lo * 10.0
    return lo, hi


def y_position(v: float, lo: float, hi: float, top: float, height: float) -> float:
    v = min(max(v, lo), hi)
    return top + (math.log10(hi) - math.log10(v)) / (math.log10(hi) - math.log10(lo)) * height


def semilogy_svg(xs, curves: Sequence[tuple[str, np.ndarray]], *, title: Optional[str] = None,
                 xlabel: str = "", ylabel: str = "") -> str:
    xs = np.asarray(xs, dtype=np.float64)
    lo, hi = log_range([np.asarray(c) for _, c in curves])
    x0, x1 = float(xs.min()), float(xs.max())
    if x1 <= x0:
        x1 = x0 + 1.0
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        '<g class="axes" stroke="black" stroke-width="1">',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T + ph}" x2="{MARGIN_L + pw}" y2="{MARGIN_T + ph}"/>',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{MARGIN_T + ph}"/>',
    ]
    decades = range(round(math.log10(lo)), round(math.log10(hi)) + 1)
    step = max(1, len(decades) // 10)
    ticks = []
    for d in list(decades)[::step]:
        y = y_position(10.0 ** d, lo, hi, MARGIN_T, ph)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.2f}" x2="{MARGIN_L}" y2="{y:.2f}"/>')
        ticks.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.2f}" text-anchor="end">1e{d}</text>')
    for t in np.linspace(x0, x1, 6):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_T + ph}" x2="{x:.2f}" y2="{MARGIN_T + ph + 5}"/>')
        ticks.append(f'<text x="{x:.2f}" y="{MARGIN_T + ph + 20}" text-anchor="middle">{t:g}</text>')
    out.append("</g>")
    out.append('<g class="ticks" fill="black">' + "".join(ticks) + "</g>")
    out.append(f'<text x="{MARGIN_L + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="20" y="{MARGIN_T + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 20 {MARGIN_T + ph / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{MARGIN_L + pw / 2}" y="{MARGIN_T - 15}" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')

    legend = ['<g class="legend">']
    for idx, (name, values) in enumerate(curves):
        color = PALETTE[idx % len(PALETTE)]
        dash = "6,4" if "bound" in name else ""
        pts = " ".join(f"{px(x):.2f},{y_position(float(v), lo, hi, MARGIN_T, ph):.2f}"
                       for x, v in zip(xs, values) if np.isfinite(v))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline class="curve" data-label="{escape(name)}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"{dash_attr} points="{pts}"/>')
        ly = MARGIN_T + 10 + 18 * idx
        lx = MARGIN_L + pw + 15
        legend.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" '
                      f'stroke-width="1.5"{dash_attr}/>')
        legend.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(name)}</text>')
    legend.append("</g>")
    out.extend(legend)
    out.append("</svg>")
    return "\n".join(out) + "\n"
