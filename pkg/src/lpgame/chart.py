"""Standalone SVG line charts of result-table columns.

Output depends only on the table contents and the requested size; every
coordinate is printed with a fixed number of decimals so identical inputs give
byte-identical files.
"""

import math
from xml.sax.saxutils import escape

MARGIN_LEFT = 80
MARGIN_RIGHT = 24
MARGIN_TOP = 40
MARGIN_BOTTOM = 56


def nice_ticks(lo, hi, target=5):
    """Round tick positions covering ``[lo, hi]``."""
    if hi <= lo:
        pad = abs(lo) * 0.5 or 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / target
    magnitude = 10 ** math.floor(math.log10(raw))
    step = next(s * magnitude for s in (1, 2, 2.5, 5, 10) if s * magnitude >= raw)
    first = math.floor(lo / step) * step
    last = math.ceil(hi / step) * step
    count = int(round((last - first) / step))
    return [first + i * step for i in range(count + 1)]


def _label(value):
    if value == 0:
        return "0"
    return format(value, ".4g")


def svg_line_chart(xs, ys, x_label, y_label, width=640, height=400, title=None):
    points = [(float(x), float(y)) for x, y in zip(xs, ys) if math.isfinite(float(x)) and math.isfinite(float(y))]
    if len(points) < 2:
        raise ValueError(f"need at least 2 finite points to draw {y_label!r} against {x_label!r}, got {len(points)}")
    points.sort()
    x_ticks = nice_ticks(min(p[0] for p in points), max(p[0] for p in points))
    y_ticks = nice_ticks(min(p[1] for p in points), max(p[1] for p in points))
    x0, x1 = x_ticks[0], x_ticks[-1]
    y0, y1 = y_ticks[0], y_ticks[-1]
    plot_w = width - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = height - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x):
        return MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w

    def sy(y):
        return MARGIN_TOP + plot_h - (y - y0) / (y1 - y0) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    bottom = MARGIN_TOP + plot_h
    for t in x_ticks:
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_TOP}" x2="{x:.2f}" y2="{bottom}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{x:.2f}" y="{bottom + 18}" text-anchor="middle">{_label(t)}</text>')
    for t in y_ticks:
        y = sy(t)
        out.append(f'<line x1="{MARGIN_LEFT}" y1="{y:.2f}" x2="{MARGIN_LEFT + plot_w}" y2="{y:.2f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{_label(t)}</text>')
    out.append(
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>'
    )
    coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
    out.append(f'<polyline points="{coords}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
    out.append(f'<text x="{MARGIN_LEFT + plot_w / 2:.2f}" y="{height - 12}" text-anchor="middle">{escape(x_label)}</text>')
    mid_y = MARGIN_TOP + plot_h / 2
    out.append(
        f'<text x="16" y="{mid_y:.2f}" text-anchor="middle" transform="rotate(-90 16 {mid_y:.2f})">{escape(y_label)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_chart(table, x_column, y_column, path, width=640, height=400, title=None):
    """Write ``y_column`` against ``x_column`` of a result table as an SVG file."""
    xs = table.column(x_column)
    ys = table.column(y_column)
    svg = svg_line_chart(
        [_as_float(v) for v in xs], [_as_float(v) for v in ys], x_column, y_column, width, height, title
    )
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc.strerror or exc}") from exc


def _as_float(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        return math.nan
