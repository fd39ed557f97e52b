"""Static top-down SVG of a scene: map, agents coloured by clique, forecasts."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

from .predictors import PredictionSet
from .scene import Clique, PolylineKind, Scene

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22")


def render_svg(
    scene: Scene,
    cliques: Sequence[Clique] = (),
    predictions: PredictionSet | None = None,
    px_per_m: float = 6.0,
    margin: float = 10.0,
) -> str:
    xs, ys = [], []
    for a in scene.agents:
        for _, s in a.history.states:
            xs.append(s.x)
            ys.append(s.y)
    for h in scene.ground_truth.values():
        for _, s in h.states:
            xs.append(s.x)
            ys.append(s.y)
    x0, y0, x1, y1 = scene.map.bounds
    if x1 > x0 and y1 > y0:
        xs += [x0, x1]
        ys += [y0, y1]
    xmin, xmax = min(xs, default=0.0) - margin, max(xs, default=0.0) + margin
    ymin, ymax = min(ys, default=0.0) - margin, max(ys, default=0.0) + margin
    W, H = (xmax - xmin) * px_per_m, (ymax - ymin) * px_per_m

    def pt(x, y):
        return f"{(x - xmin) * px_per_m:.2f},{(ymax - y) * px_per_m:.2f}"

    def path(points, colour, width, dash=""):
        d = " ".join(pt(x, y) for x, y in points)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline points="{d}" fill="none" stroke="{colour}" stroke-width="{width}"{extra}/>'

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" viewBox="0 0 {W:.2f} {H:.2f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for p in scene.map.polylines:
        if p.kind is PolylineKind.BARRIER:
            out.append(path(p.points, "#333333", 3))
        else:
            out.append(path(p.points, "#aaaaaa", 1, "6,4"))

    colour = {}
    for k, c in enumerate(cliques):
        for aid in c.member_ids:
            colour[aid] = PALETTE[k % len(PALETTE)]
    for a in sorted(scene.agents, key=lambda a: a.agent_id):
        col = colour.get(a.agent_id, "#777777")
        out.append(path([s.position for _, s in a.history.states], col, 1.5))
        gt = scene.ground_truth.get(a.agent_id)
        if gt is not None:
            out.append(path([a.history.last.position] + [s.position for _, s in gt.states], "#000000", 1, "2,2"))
        if predictions is not None and a.agent_id in predictions.modes:
            for m in predictions.modes[a.agent_id]:
                pts = [a.history.last.position] + [s.position for s in m.states]
                opacity = 0.25 + 0.75 * m.confidence
                out.append(path(pts, col, 2).replace("/>", f' stroke-opacity="{opacity:.2f}"/>'))
        s = a.history.last
        r = a.agent_type.footprint_radius * px_per_m
        cx, cy = pt(s.x, s.y).split(",")
        out.append(f'<circle cx="{cx}" cy="{cy}" r="{r:.2f}" fill="{col}" fill-opacity="0.6"/>')
        out.append(f'<text x="{cx}" y="{cy}" font-size="10" font-family="sans-serif">{escape(a.agent_id)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
