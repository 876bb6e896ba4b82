"""Deterministic SVG rendering of an episode over its map."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .executor import EpisodeTrace
from .formula import letter_names
from .mapfile import MapBundle

__all__ = ["render_trace"]

CELL = 40
MARGIN = 10


def _centre(bundle: MapBundle, x: int) -> tuple[int, int]:
    cx, cy = bundle.mdp.states[x]
    # +y points up on the grid, down in SVG
    return MARGIN + cx * CELL + CELL // 2, MARGIN + (bundle.height - 1 - cy) * CELL + CELL // 2


def render_trace(trace: EpisodeTrace | None, bundle: MapBundle) -> str:
    """Grid, belief shading (label mass), realised path and replan markers."""
    m, b = bundle.mdp, bundle.belief
    w = 2 * MARGIN + bundle.width * CELL
    h = 2 * MARGIN + bundle.height * CELL
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]
    blocked = set(bundle.blocked)
    for gy in range(bundle.height):
        for gx in range(bundle.width):
            px, py = MARGIN + gx * CELL, MARGIN + (bundle.height - 1 - gy) * CELL
            if (gx, gy) in blocked:
                fill, opacity = "black", 1.0
            else:
                x = m.index[(gx, gy)]
                opacity = 1.0 - b.prob(x, 0)
                fill = "orange"
            out.append(
                f'<rect class="cell" x="{px}" y="{py}" width="{CELL}" height="{CELL}" '
                f'fill="{fill}" fill-opacity="{opacity:.3f}" stroke="grey"/>'
            )
    for x in range(m.num_states):
        names = sorted({n for lt in b.support(x) for n in letter_names(lt, m.alphabet)})
        if names:
            cx, cy = _centre(bundle, x)
            out.append(
                f'<text x="{cx}" y="{cy + 4}" font-size="9" text-anchor="middle">'
                f"{escape('/'.join(names))}</text>"
            )
    if trace is not None and trace.states:
        pts = [_centre(bundle, x) for x in trace.states]
        for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
            out.append(
                f'<line class="path" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black" stroke-width="3"/>'
            )
        sx, sy = pts[0]
        out.append(f'<circle class="start" cx="{sx}" cy="{sy}" r="6" fill="green"/>')
        for r in trace.replans:
            t = r["t"]
            if t < len(pts):
                rx, ry = pts[t]
                out.append(f'<circle class="replan" cx="{rx}" cy="{ry}" r="4" fill="red"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
