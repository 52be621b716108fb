"""Tiny deterministic SVG line-plot writer (axes, ticks, polylines, legend)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=55)


def _nice_ticks(lo, hi, n=5):
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return [0.0, 1.0]
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        if v >= lo - 1e-9 * step:
            ticks.append(round(v, 12))
        v += step
    return ticks


def _fmt(v):
    return f"{v:.2f}".rstrip("0").rstrip(".") if v != int(v) else str(int(v))


def line_plot(series, title="", xlabel="", ylabel="", markers=False):
    """Return SVG text. ``series`` is a list of ``(x, y, label)`` or ``(x, y, label, style)``.

    ``style`` may be ``"line"`` (default), ``"points"`` or ``"dash"``. Non-finite
    samples are skipped.
    """
    xs, ys = [], []
    cleaned = []
    for s in series:
        x, y, label = np.asarray(s[0], float), np.asarray(s[1], float), s[2]
        style = s[3] if len(s) > 3 else ("points" if markers else "line")
        ok = np.isfinite(x) & np.isfinite(y)
        cleaned.append((x[ok], y[ok], label, style))
        xs.append(x[ok])
        ys.append(y[ok])
    allx = np.concatenate(xs) if xs else np.zeros(0)
    ally = np.concatenate(ys) if ys else np.zeros(0)
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    xt = _nice_ticks(float(allx.min()), float(allx.max()))
    yt = _nice_ticks(float(ally.min()), float(ally.max()))
    x0, x1 = min(xt[0], allx.min()), max(xt[-1], allx.max())
    y0, y1 = min(yt[0], ally.min()), max(yt[-1], ally.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def px(v):
        return L + (v - x0) / (x1 - x0) * (R - L)

    def py(v):
        return B - (v - y0) / (y1 - y0) * (B - T)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{(L + R) / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{L}" y="{T}" width="{R - L}" height="{B - T}" fill="none" stroke="black"/>',
    ]
    for t in xt:
        X = px(t)
        out.append(f'<line x1="{X:.1f}" y1="{B}" x2="{X:.1f}" y2="{B + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.1f}" y="{B + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in yt:
        Y = py(t)
        out.append(f'<line x1="{L - 5}" y1="{Y:.1f}" x2="{L}" y2="{Y:.1f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{Y + 4:.1f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{(L + R) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{(T + B) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(T + B) / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (x, y, label, style) in enumerate(cleaned):
        color = COLORS[i % len(COLORS)]
        if style == "points":
            for a, b in zip(x, y):
                out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="{color}"/>')
        elif len(x):
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
            dash = ' stroke-dasharray="6,4"' if style == "dash" else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        ly = T + 14 + 18 * i
        out.append(f'<line x1="{R + 12}" y1="{ly - 4}" x2="{R + 32}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{R + 38}" y="{ly}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_plot(path, series, **kwargs):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(line_plot(series, **kwargs))
