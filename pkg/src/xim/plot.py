"""Dependency-free SVG scatter plots of 2-D embeddings."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _fmt(v):
    return f"{v:.3f}"


def scatter_svg(coords, labels=None, width=480, height=480, radius=3.0, title=None) -> str:
    """Standalone SVG with one circle per point, colour keyed by label.

    Axes span the bounding box of the points plus a 5% margin; output is
    byte-identical for identical input.
    """
    y = np.asarray(coords, dtype=float)
    if y.ndim != 2 or y.shape[1] != 2:
        raise ValueError(f"scatter needs 2-D coordinates, got shape {y.shape}")
    lo, hi = y.min(axis=0), y.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    lo, hi = lo - 0.05 * span, hi + 0.05 * span
    pad, legend_w = 40, 90 if labels is not None else 0
    pw, ph = width - 2 * pad, height - 2 * pad
    sx = lambda v: pad + (v - lo[0]) / (hi[0] - lo[0]) * pw
    sy = lambda v: pad + (hi[1] - v) / (hi[1] - lo[1]) * ph

    if labels is None:
        keys, cls = ["all"], np.zeros(len(y), dtype=int)
    else:
        labels = [str(v) for v in labels]
        keys = sorted(set(labels), key=lambda s: (len(s), s))
        idx = {k: i for i, k in enumerate(keys)}
        cls = np.array([idx[v] for v in labels], dtype=int)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + legend_w}" height="{height}" '
        f'viewBox="0 0 {width + legend_w} {height}">',
        f'<rect x="0" y="0" width="{width + legend_w}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{pad}" y="{pad // 2}" font-size="14">{escape(title)}</text>')
    out.append(f'<g class="axes" stroke="black" fill="none">')
    out.append(f'<line x1="{pad}" y1="{pad + ph}" x2="{pad + pw}" y2="{pad + ph}"/>')
    out.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{pad + ph}"/>')
    out.append("</g>")
    out.append('<g class="ticks" font-size="10">')
    out.append(f'<text x="{pad}" y="{pad + ph + 14}">{_fmt(lo[0])}</text>')
    out.append(f'<text x="{pad + pw}" y="{pad + ph + 14}" text-anchor="end">{_fmt(hi[0])}</text>')
    out.append(f'<text x="{pad - 4}" y="{pad + ph}" text-anchor="end">{_fmt(lo[1])}</text>')
    out.append(f'<text x="{pad - 4}" y="{pad + 10}" text-anchor="end">{_fmt(hi[1])}</text>')
    out.append("</g>")
    out.append('<g class="points">')
    for (a, b), c in zip(y, cls):
        colour = PALETTE[c % len(PALETTE)]
        out.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="{radius}" fill="{colour}"/>')
    out.append("</g>")
    if labels is not None:
        out.append('<g class="legend" font-size="12">')
        for i, k in enumerate(keys):
            ly = pad + 18 * i
            out.append(
                f'<g class="legend-entry"><rect x="{width + 5}" y="{ly}" width="10" height="10" '
                f'fill="{PALETTE[i % len(PALETTE)]}"/><text x="{width + 20}" y="{ly + 9}">{escape(k)}</text></g>'
            )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
