"""Minimal static SVG: axes, error-bar scatter and polylines."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_COLORS = ["#c0392b", "#2c3e50", "#27ae60", "#8e44ad"]


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    span = hi - lo
    if span <= 0:
        return np.array([lo])
    raw = span / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 1e-9 * span, step)


def correlation_figure(points: tuple[np.ndarray, np.ndarray, np.ndarray] | None,
                       curves: dict[str, tuple[np.ndarray, np.ndarray]], *,
                       title: str = "", xlabel: str = "|w1 - w2|^2", ylabel: str = "correlation",
                       width: int = 640, height: int = 420) -> str:
    """SVG with empirical ``(x, y, err)`` points and named theory polylines."""
    ml, mr, mt, mb = 64, 20, 36, 52
    pw, ph = width - ml - mr, height - mt - mb
    xs = [c[0] for c in curves.values()]
    ys = [c[1] for c in curves.values()]
    if points is not None:
        xs.append(points[0])
        ys += [points[1] - points[2], points[1] + points[2]]
    allx = np.concatenate(xs) if xs else np.array([0.0, 1.0])
    ally = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    allx, ally = allx[np.isfinite(allx)], ally[np.isfinite(ally)]
    x0, x1 = float(min(allx.min(), 0.0)), float(allx.max()) if allx.size else 1.0
    y0, y1 = float(min(ally.min(), 0.0)), float(max(ally.max(), 1.0)) * 1.05
    if x1 <= x0:
        x1 = x0 + 1.0

    def sx(x):
        return ml + (np.asarray(x) - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + ph - (np.asarray(y) - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{mt + ph}" x2="{X:.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{mt + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        Y = sy(t)
        out.append(f'<line x1="{ml - 5}" y1="{Y:.2f}" x2="{ml}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{Y + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16 {mt + ph / 2}) rotate(-90)" text-anchor="middle">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for k, (name, (x, y)) in enumerate(curves.items()):
        col = _COLORS[k % len(_COLORS)]
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx(x[ok]), sy(y[ok])))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw - 8}" y="{mt + 16 + 16 * k}" text-anchor="end" fill="{col}">{escape(name)}</text>')
    if points is not None:
        for a, b, e in zip(*points):
            if not (np.isfinite(a) and np.isfinite(b)):
                continue
            X, Y = sx(a), sy(b)
            if np.isfinite(e) and e > 0:
                out.append(f'<line x1="{X:.2f}" y1="{sy(b - e):.2f}" x2="{X:.2f}" y2="{sy(b + e):.2f}" stroke="#555"/>')
            out.append(f'<circle cx="{X:.2f}" cy="{Y:.2f}" r="3" fill="#2980b9"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
