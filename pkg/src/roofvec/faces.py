"""Roof face vectorization in the raster domain.

Edges are drawn into a binary grid, the free pixels are split into
4-connected components, and every component other than the background is
turned back into a vertex cycle using the edges whose pixels touch it.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geom import point_in_polygon, signed_area
from .ingest import FaceSet
from .polygonize import RoofGraph

log = logging.getLogger(__name__)

A_MIN = 16
FOUR_CONN = ndimage.generate_binary_structure(2, 1)


def bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Integer-error Bresenham line, all octants.

    Traversal always starts at the endpoint with the smaller major-axis
    coordinate so the pixel set does not depend on endpoint order.
    """
    steep = abs(y1 - y0) > abs(x1 - x0)
    if steep:
        x0, y0, x1, y1 = y0, x0, y1, x1
    if x0 > x1:
        x0, y0, x1, y1 = x1, y1, x0, y0
    dx, dy = x1 - x0, abs(y1 - y0)
    ystep = 1 if y1 >= y0 else -1
    err = 2 * dy - dx
    y = y0
    out = []
    for x in range(x0, x1 + 1):
        out.append((y, x) if steep else (x, y))
        if err >= 0:
            y += ystep
            err -= 2 * dx
        err += 2 * dy
    return out


@dataclass
class RasterGrid:
    width: int
    height: int
    occupancy: np.ndarray  # (height, width) uint8, 1 = edge pixel
    edge_pixels: dict[int, np.ndarray] = field(default_factory=dict)  # edge index -> (k, 2) of (x, y)
    labels: np.ndarray | None = None  # 0 on edge pixels, 1..K elsewhere
    n_components: int = 0
    background: set[int] = field(default_factory=set)
    expected_faces: int | None = None

    @property
    def face_labels(self) -> list[int]:
        return [k for k in range(1, self.n_components + 1) if k not in self.background]

    @property
    def leak_suspected(self) -> bool:
        if self.expected_faces is None or self.labels is None:
            return False
        return len(self.face_labels) < self.expected_faces


def cyclomatic_number(graph: RoofGraph) -> int:
    """E - V + C: the number of bounded faces of a planar embedding."""
    n = len(graph.vertices)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b, _ in graph.edges:
        parent[find(a)] = find(b)
    used = {v for a, b, _ in graph.edges for v in (a, b)}
    comps = len({find(v) for v in used})
    return len(graph.edges) - len(used) + comps


def rasterize_edges(graph: RoofGraph, width: int, height: int) -> RasterGrid:
    if not graph.edges:
        raise ValueError("cannot rasterize an empty graph")
    occ = np.zeros((height, width), dtype=np.uint8)
    iv = np.rint(graph.vertices).astype(int)
    per_edge = {}
    clipped = 0
    for k, (a, b, _) in enumerate(graph.edges):
        px = np.array(bresenham(iv[a, 0], iv[a, 1], iv[b, 0], iv[b, 1]), dtype=int)
        ok = (px[:, 0] >= 0) & (px[:, 0] < width) & (px[:, 1] >= 0) & (px[:, 1] < height)
        if not ok.all():
            clipped += 1
            px = px[ok]
        per_edge[k] = px
        if len(px):
            occ[px[:, 1], px[:, 0]] = 1
    if clipped:
        log.warning("%d edges reach outside the %dx%d grid; clipped", clipped, width, height)
    return RasterGrid(width, height, occ, per_edge, expected_faces=cyclomatic_number(graph))


def label_components(grid: RasterGrid) -> RasterGrid:
    """4-connected labeling of free pixels; border-touching components are background."""
    labels, n = ndimage.label(grid.occupancy == 0, structure=FOUR_CONN)
    border = np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    grid.labels = labels
    grid.n_components = int(n)
    grid.background = {int(v) for v in np.unique(border) if v}
    if grid.leak_suspected:
        log.info("fewer face components (%d) than graph cycles (%d): boundary leak", len(grid.face_labels), grid.expected_faces)
    return grid


def collect_incident_edges(grid: RasterGrid) -> dict[int, set[int]]:
    """Component label -> indices of graph edges with a pixel 4-adjacent to it.

    Pixels drawn by several edges (junctions) are ignored, since they touch
    every face around the vertex; an edge made only of such pixels falls
    back to all of them.
    """
    if grid.labels is None:
        raise ValueError("labels not computed")
    lab = np.pad(grid.labels, 1)
    count = np.zeros((grid.height + 2, grid.width + 2), dtype=np.int32)
    for px in grid.edge_pixels.values():
        if len(px):
            # unique per edge so a pixel repeated within one edge counts once
            u = np.unique(px, axis=0)
            np.add.at(count, (u[:, 1] + 1, u[:, 0] + 1), 1)
    inc: dict[int, set[int]] = defaultdict(set)
    for k, px in grid.edge_pixels.items():
        if not len(px):
            continue
        own = px[count[px[:, 1] + 1, px[:, 0] + 1] == 1]
        if len(own):
            px = own
        x, y = px[:, 0] + 1, px[:, 1] + 1
        near = np.concatenate([lab[y, x - 1], lab[y, x + 1], lab[y - 1, x], lab[y + 1, x]])
        for c in np.unique(near):
            if c:
                inc[int(c)].add(k)
    return dict(inc)


def _prune_leaves(edges: list[tuple[int, int, int]]) -> list[tuple[int, int, int]]:
    edges = list(edges)
    while True:
        deg: dict[int, int] = defaultdict(int)
        for a, b, _ in edges:
            deg[a] += 1
            deg[b] += 1
        keep = [e for e in edges if deg[e[0]] > 1 and deg[e[1]] > 1]
        if len(keep) == len(edges):
            return keep
        edges = keep


def trace_faces(vertices: np.ndarray, edges: list[tuple[int, int, int]]) -> list[tuple[list[int], list[int]]]:
    """All faces of a planar straight-line graph by half-edge walking.

    From half-edge u->v the walk continues with the edge at v that comes
    next clockwise after v->u, which keeps the face on the left. Bounded
    faces come out counterclockwise (positive area), outer faces clockwise.
    Returns (vertex cycle, edge-index cycle) pairs.
    """
    out_edges: dict[int, list[tuple[float, int, int]]] = defaultdict(list)
    for k, (a, b, _) in enumerate(edges):
        for u, v in ((a, b), (b, a)):
            d = vertices[v] - vertices[u]
            out_edges[u].append((math.atan2(d[1], d[0]), v, k))
    for u in out_edges:
        out_edges[u].sort()
    pos = {(u, v): i for u, lst in out_edges.items() for i, (_, v, _) in enumerate(lst)}

    faces = []
    used: set[tuple[int, int]] = set()
    for u0, lst in out_edges.items():
        for _, v0, _ in lst:
            if (u0, v0) in used:
                continue
            cyc, eids = [], []
            u, v = u0, v0
            while (u, v) not in used:
                used.add((u, v))
                cyc.append(u)
                eids.append(out_edges[u][pos[(u, v)]][2])
                around = out_edges[v]
                i = pos[(v, u)]
                _, w, _ = around[(i - 1) % len(around)]
                u, v = v, w
            faces.append((cyc, eids))
    return faces


def _interior_point(mask: np.ndarray) -> tuple[float, float]:
    """Pixel of the component deepest inside it, as (x, y)."""
    dist = ndimage.distance_transform_edt(np.pad(mask, 1))[1:-1, 1:-1]
    y, x = np.unravel_index(int(np.argmax(dist)), dist.shape)
    return float(x), float(y)


def _canonical(cycle: list[int], eids: list[int], vertices: np.ndarray) -> tuple[list[int], list[int]]:
    # start at the lexicographically smallest vertex
    start = min(range(len(cycle)), key=lambda i: (vertices[cycle[i], 0], vertices[cycle[i], 1]))
    return cycle[start:] + cycle[:start], eids[start:] + eids[:start]


@dataclass
class FaceReport:
    emitted: int = 0
    skipped: list[dict] = field(default_factory=list)
    slivers: int = 0
    leak_suspected: bool = False

    def to_dict(self) -> dict:
        return {"emitted": self.emitted, "skipped": self.skipped, "slivers": self.slivers, "leak_suspected": self.leak_suspected}


def vectorize_faces(
    graph: RoofGraph,
    grid: RasterGrid,
    incidence: dict[int, set[int]],
    a_min: float = A_MIN,
    report: FaceReport | None = None,
) -> FaceSet:
    """One counterclockwise vertex cycle per face component.

    For each component the faces of its incident-edge subgraph (leaves
    pruned) are traced, and the smallest bounded face containing the
    component's deepest pixel is kept. Components with no such face are
    skipped and reported.
    """
    rep = report if report is not None else FaceReport()
    rep.leak_suspected = grid.leak_suspected
    V = graph.vertices
    found: dict[tuple[int, ...], tuple[int, list[int], list[int]]] = {}
    slices = ndimage.find_objects(grid.labels)
    for c in grid.face_labels:
        sl = slices[c - 1]
        mask = grid.labels[sl] == c
        npx = int(mask.sum())
        if npx < a_min:
            rep.slivers += 1
            continue
        sub = [graph.edges[k] for k in sorted(incidence.get(c, ()))]
        sub = _prune_leaves(sub)
        if not sub:
            rep.skipped.append({"component": c, "pixels": npx, "reason": "no cycle among incident edges"})
            continue
        px, py = _interior_point(mask)
        pt = (px + sl[1].start, py + sl[0].start)
        best = None
        for cyc, eidx in trace_faces(V, sub):
            if len(set(cyc)) != len(cyc) or len(cyc) < 3:
                continue
            ring = V[cyc]
            area = signed_area(ring)
            if area <= 0 or not point_in_polygon(pt, ring):
                continue
            if best is None or area < best[0]:
                best = (area, cyc, [sub[k][2] for k in eidx])
        if best is None:
            rep.skipped.append({"component": c, "pixels": npx, "reason": "component not enclosed by a simple cycle"})
            continue
        area, cyc, eids = best
        if area < a_min:
            rep.slivers += 1
            continue
        key = tuple(sorted(cyc))
        if key in found and found[key][0] >= npx:
            continue
        found[key] = (npx, cyc, eids)
    entries = [_canonical(cyc, eids, V) for _, cyc, eids in found.values()]
    entries.sort(key=lambda ce: (tuple(V[ce[0][0]]), len(ce[0]), tuple(ce[0])))
    faces = [cyc for cyc, _ in entries]
    face_eids = [eids for _, eids in entries]
    for s in rep.skipped:
        log.info("skipped face component %(component)d (%(pixels)d px): %(reason)s", s)
    rep.emitted = len(faces)
    return FaceSet(V.copy(), faces, face_eids)


def extract_faces(graph: RoofGraph, image_size: tuple[int, int], a_min: float = A_MIN) -> tuple[FaceSet, FaceReport, RasterGrid]:
    """Rasterize, label, collect incidence and vectorize in one go."""
    rep = FaceReport()
    if not graph.edges:
        rep.leak_suspected = False
        return FaceSet(graph.vertices.copy()), rep, RasterGrid(image_size[0], image_size[1], np.zeros(image_size[::-1], np.uint8))
    grid = rasterize_edges(graph, *image_size)
    label_components(grid)
    inc = collect_incident_edges(grid)
    fs = vectorize_faces(graph, grid, inc, a_min, rep)
    return fs, rep, grid


def write_pgm(path, labels: np.ndarray) -> None:
    """Dump a label grid as a binary graymap; labels are spread over 1..255, edges stay 0."""
    lab = np.asarray(labels)
    img = np.zeros(lab.shape, dtype=np.uint8)
    nz = lab > 0
    if nz.any():
        img[nz] = (1 + (lab[nz] * 97) % 255).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())
