"""SVG overlays of one building: input edges, completed graph, faces, reference."""

from __future__ import annotations

import colorsys
from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .geom import Segment
from .ingest import FaceSet
from .polygonize import RoofGraph

LAYERS = ("edges", "graph", "faces", "reference")
DRAW_ORDER = ("faces", "reference", "edges", "graph")
GOLDEN_ANGLE = 137.50776405003785


@dataclass
class RenderSpec:
    width: int
    height: int
    layers: tuple[str, ...] = ("faces", "graph")
    palette_seed: int = 0
    line_color: str = "#ffffff"
    edge_color: str = "#ffd400"
    reference_color: str = "#00b7ff"
    background: str | None = "#202020"
    vertex_radius: float = 2.5
    stroke_width: float = 1.5

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("at least one layer is required")
        bad = set(self.layers) - set(LAYERS)
        if bad:
            raise ValueError(f"unknown layers {sorted(bad)}; expected a subset of {LAYERS}")


@dataclass
class BuildingArtifacts:
    edges: list[Segment] | None = None
    graph: RoofGraph | None = None
    faces: FaceSet | None = None
    reference: FaceSet | None = None
    title: str = ""


def face_color(index: int, n: int, seed: int = 0) -> str:
    """Evenly spaced hues, rotated by the palette seed."""
    hue = ((seed * GOLDEN_ANGLE) % 360 + index * 360.0 / max(n, 1)) % 360
    r, g, b = colorsys.hls_to_rgb(hue / 360.0, 0.55, 0.65)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def _f(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _path(ring: np.ndarray) -> str:
    pts = " L ".join(f"{_f(x)} {_f(y)}" for x, y in ring)
    return f"M {pts} Z"


def render_svg(art: BuildingArtifacts, spec: RenderSpec) -> str:
    for layer in spec.layers:
        if layer == "edges" and not art.edges:
            raise ValueError("layer 'edges' requested but no input edges given")
        if layer == "graph" and (art.graph is None or not art.graph.edges):
            raise ValueError("layer 'graph' requested but no graph given")
        if layer == "faces" and (art.faces is None or not len(art.faces)):
            raise ValueError("layer 'faces' requested but the face set is empty")
        if layer == "reference" and (art.reference is None or not len(art.reference)):
            raise ValueError("layer 'reference' requested but no reference faces given")

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}">',
    ]
    if art.title:
        out.append(f"<title>{escape(art.title)}</title>")
    if spec.background:
        out.append(f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="{spec.background}"/>')

    # painter's order: filled faces under outlines under points
    for layer in sorted(spec.layers, key=DRAW_ORDER.index):
        if layer == "faces":
            fs = art.faces
            out.append('<g id="faces" stroke="none" fill-opacity="0.75">')
            for k in range(len(fs)):
                color = face_color(k, len(fs), spec.palette_seed)
                out.append(f'<path d="{_path(fs.ring(k))}" fill="{color}"/>')
            out.append("</g>")
        elif layer == "reference":
            fs = art.reference
            out.append(
                f'<g id="reference" fill="none" stroke={quoteattr(spec.reference_color)} '
                f'stroke-width="{_f(spec.stroke_width)}" stroke-dasharray="6 4">'
            )
            for ring in fs.rings():
                out.append(f'<path d="{_path(ring)}"/>')
            out.append("</g>")
        elif layer == "edges":
            out.append(f'<g id="edges" stroke={quoteattr(spec.edge_color)} stroke-width="{_f(spec.stroke_width * 2)}" stroke-opacity="0.8">')
            for s in art.edges:
                out.append(f'<line x1="{_f(s.p0.x)}" y1="{_f(s.p0.y)}" x2="{_f(s.p1.x)}" y2="{_f(s.p1.y)}"/>')
            out.append("</g>")
        elif layer == "graph":
            g = art.graph
            out.append(f'<g id="graph" stroke={quoteattr(spec.line_color)} stroke-width="{_f(spec.stroke_width)}">')
            for a, b, _ in g.edges:
                (x0, y0), (x1, y1) = g.vertices[a], g.vertices[b]
                out.append(f'<line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x1)}" y2="{_f(y1)}"/>')
            out.append("</g>")
            out.append(f'<g id="vertices" fill={quoteattr(spec.line_color)} stroke="none">')
            used = sorted({v for a, b, _ in g.edges for v in (a, b)})
            for v in used:
                x, y = g.vertices[v]
                out.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(spec.vertex_radius)}"/>')
            out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
