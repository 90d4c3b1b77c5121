"""SVG snapshots of a forest-fire run.

Each site is drawn as its hexagonal cell.  Colours: white vacant, gray
occupied, red for the largest connected burnt cluster, blue for every other
burnt site, green for ignition vertices that have triggered by the snapshot
time (drawn just outside the domain).
"""

from __future__ import annotations

import math

import numpy as np

from .kernels import graph
from .lattice import SQRT3, embed

WHITE = "#ffffff"
GRAY = "#9a9a9a"
RED = "#d62728"
BLUE = "#1f5fbf"
GREEN = "#2ca02c"

_R = 1.0 / SQRT3  # circumradius of a unit-spacing hexagonal cell
_CORNERS = [(_R * math.cos(math.radians(30 + 60 * k)), _R * math.sin(math.radians(30 + 60 * k))) for k in range(6)]


def burnt_components(domain, states) -> tuple[np.ndarray, np.ndarray]:
    """Labels of connected burnt clusters (-1 elsewhere) and their sizes."""
    return graph.label_clusters(domain.nbr, np.asarray(states) == 2)


def site_colors(run, t: float) -> tuple[list[str], list]:
    """Fill colour per site and the triggered ignition vertices at time ``t``."""
    states = run.snapshot(t).state
    labels, sizes = burnt_components(run.domain, states)
    largest = int(np.argmax(sizes)) if sizes.size else -1
    colors = []
    for i, s in enumerate(states):
        if s == 0:
            colors.append(WHITE)
        elif s == 1:
            colors.append(GRAY)
        elif labels[i] == largest:
            colors.append(RED)
        else:
            colors.append(BLUE)
    return colors, run.triggered_by(t)


def _polygon(x, y, fill):
    # SVG y grows downward
    pts = " ".join(f"{x + dx:.4f},{-(y + dy):.4f}" for dx, dy in _CORNERS)
    return f'<polygon points="{pts}" fill="{fill}" stroke="#444444" stroke-width="0.03"/>'


def render_svg(run, t: float) -> str:
    colors, triggered = site_colors(run, t)
    xy = run.domain.xy
    cells = [(float(x), float(y), c) for (x, y), c in zip(xy, colors)]
    cells += [(*embed(s), GREEN) for s in triggered]
    xs = [c[0] for c in cells] or [0.0]
    ys = [c[1] for c in cells] or [0.0]
    pad = 1.0
    x0, x1 = min(xs) - pad, max(xs) + pad
    y0, y1 = min(ys) - pad, max(ys) + pad
    width, height = x1 - x0, y1 - y0
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{x0:.4f} {-y1:.4f} {width:.4f} {height:.4f}" '
        f'width="{width * 10:.0f}" height="{height * 10:.0f}">',
    ]
    out += [_polygon(x, y, c) for x, y, c in cells]
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_snapshot(run, t: float, output) -> str:
    """Write the snapshot retained at ``t`` as an SVG file; returns the text."""
    if t not in run.snapshots:
        raise KeyError(f"no snapshot retained at t={t}")
    text = render_svg(run, t)
    with open(output, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text
