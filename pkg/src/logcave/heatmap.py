"""Deterministic SVG heatmaps for node-field CSVs.

No plotting dependency: cells are emitted as colored rects with a colorbar,
an optional domain outline, and a marker at the worst (largest-value) node.
Identical input produces byte-identical SVG.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path


class HeatmapError(ValueError):
    pass


_PALETTES = {
    "viridis": [
        (0.0, (68, 1, 84)), (0.25, (59, 82, 139)), (0.5, (33, 145, 140)),
        (0.75, (94, 201, 98)), (1.0, (253, 231, 37)),
    ],
    "coolwarm": [
        (0.0, (59, 76, 192)), (0.5, (221, 221, 221)), (1.0, (180, 4, 38)),
    ],
}


def _color(palette, t):
    stops = _PALETTES[palette]
    t = min(max(t, 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(stops, stops[1:]):
        if t <= t1:
            f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            return tuple(round(a + f * (b - a)) for a, b in zip(c0, c1))
    return stops[-1][1]


def read_field_csv(path):
    xs, ys, vs = [], [], []
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) < 3:
            raise HeatmapError(f"field CSV needs x,y,value columns, got {header}")
        for row in reader:
            xs.append(float(row[0]))
            ys.append(float(row[1]))
            vs.append(float(row[2]))
    if not xs:
        raise HeatmapError("empty field CSV")
    return xs, ys, vs


def render_heatmap(field_csv, palette: str, out, outline=None, title: str | None = None,
                   width: int = 560) -> Path:
    """Render an x,y,value CSV as an SVG heatmap.

    outline is an optional sequence of (x, y) boundary points drawn as a
    closed polyline; the node attaining the maximum value is marked.
    """
    if palette not in _PALETTES:
        raise HeatmapError(f"unknown palette {palette!r}; options: {sorted(_PALETTES)}")
    xs, ys, vs = read_field_csv(field_csv)

    ux = sorted(set(xs))
    dx = min((b - a) for a, b in zip(ux, ux[1:])) if len(ux) > 1 else 1.0
    vmin, vmax = min(vs), max(vs)
    constant = math.isclose(vmin, vmax, rel_tol=0.0, abs_tol=0.0) or vmin == vmax
    span = (vmax - vmin) if vmax > vmin else 1.0

    xmin, xmax = min(xs) - dx / 2, max(xs) + dx / 2
    ymin, ymax = min(ys) - dx / 2, max(ys) + dx / 2
    scale = (width - 120) / (xmax - xmin)
    H = (ymax - ymin) * scale + 70

    def px(x):
        return 20 + (x - xmin) * scale

    def py(y):
        return 30 + (ymax - y) * scale

    cell = dx * scale
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{H:.6g}" '
        f'viewBox="0 0 {width} {H:.6g}">',
        f'<rect width="{width}" height="{H:.6g}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="20" y="20" font-family="monospace" font-size="13">{title}</text>')

    k_worst = max(range(len(vs)), key=lambda k: vs[k])
    for x, y, v in zip(xs, ys, vs):
        t = 0.5 if constant else (v - vmin) / span
        r, g, b = _color(palette, t)
        parts.append(
            f'<rect x="{px(x) - cell/2:.3f}" y="{py(y) - cell/2:.3f}" '
            f'width="{cell:.3f}" height="{cell:.3f}" fill="rgb({r},{g},{b})"/>'
        )
    if outline is not None:
        pts = " ".join(f"{px(x):.3f},{py(y):.3f}" for x, y in outline)
        parts.append(f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="1.2"/>')
    parts.append(
        f'<circle cx="{px(xs[k_worst]):.3f}" cy="{py(ys[k_worst]):.3f}" r="4" '
        'fill="none" stroke="red" stroke-width="1.5"/>'
    )

    # colorbar
    bx = width - 80
    bh = H - 90
    nseg = 24
    for k in range(nseg):
        t = 1.0 - (k + 0.5) / nseg
        r, g, b = _color(palette, 0.5 if constant else t)
        parts.append(
            f'<rect x="{bx}" y="{30 + k * bh / nseg:.3f}" width="16" '
            f'height="{bh / nseg + 0.5:.3f}" fill="rgb({r},{g},{b})"/>'
        )
    if constant:
        labels = [(30 + bh / 2, f"constant {vmin:.6g}")]
    else:
        labels = [(34, f"{vmax:.6g}"), (30 + bh, f"{vmin:.6g}")]
    for yy, txt in labels:
        parts.append(
            f'<text x="{bx + 20}" y="{yy:.3f}" font-family="monospace" font-size="11">{txt}</text>'
        )
    parts.append("</svg>")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(parts) + "\n")
    return out
