"""Edge complementation: turn loose roof-edge segments into a closed graph.

Pipeline, one building at a time:

1. ``cluster_endpoints``: DBSCAN (minPts = 1) over all segment endpoints.
   Clusters with two or more endpoints are junctions, singletons are gaps.
2. ``snap_junctions``: junction members move to the cluster centroid, which
   becomes a suggested junction; the supporting-line intersection of every
   pair of cluster-mate edges is stored as an extra suggestion.
3. ``complete_gaps``: each gap endpoint is pushed forward along its own line
   to the nearest suggestion close to that line.
4. ``build_graph``: merge coincident endpoints into vertices.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geom import Point, Segment, line_intersection

log = logging.getLogger(__name__)

REFERENCE_IMAGE_SIDE = 1024
DEFAULT_EPS = 12.0
DEFAULT_TAU_LINE = 3.0
DEFAULT_LMAX_FRACTION = 0.25
DEFAULT_RINT_FACTOR = 3.0
GRAPH_SNAP = 1e-6


class ClusterKind(enum.Enum):
    JUNCTION = "junction"
    GAP = "gap"


class Origin(enum.Enum):
    CLUSTER_CENTROID = "cluster_centroid"
    PAIR_INTERSECTION = "pair_intersection"


@dataclass(frozen=True)
class EndpointRef:
    segment_id: int
    which: int  # 0 = p0, 1 = p1


@dataclass
class Cluster:
    members: list[EndpointRef]
    centroid: Point

    @property
    def kind(self) -> ClusterKind:
        return ClusterKind.JUNCTION if len(self.members) >= 2 else ClusterKind.GAP


@dataclass
class SuggestedJunction:
    position: Point
    origin: Origin
    cluster: int  # index into the cluster list it came from


@dataclass
class RoofGraph:
    vertices: np.ndarray  # (n, 2)
    edges: list[tuple[int, int, int]]  # (vertex a, vertex b, segment id)

    def degree(self) -> np.ndarray:
        deg = np.zeros(len(self.vertices), dtype=int)
        for a, b, _ in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def dangling_edges(self) -> list[int]:
        """Segment ids of edges with a degree-1 vertex."""
        deg = self.degree()
        return [sid for a, b, sid in self.edges if deg[a] == 1 or deg[b] == 1]

    def segment(self, k: int) -> Segment:
        a, b, sid = self.edges[k]
        (x0, y0), (x1, y1) = self.vertices[a], self.vertices[b]
        return Segment.from_coords(sid, x0, y0, x1, y1)

    def segments(self) -> list[Segment]:
        return [self.segment(k) for k in range(len(self.edges))]


@dataclass
class PolygonizeParams:
    """Complementation thresholds in pixels; ``None`` means derive from the image size.

    ``eps`` defaults to 12 px at a 1024 px image side, scaled linearly;
    ``r_int`` to 3 * eps; ``l_max`` to a quarter of the image diagonal.
    """

    eps: float | None = None
    tau_line: float = DEFAULT_TAU_LINE
    l_max: float | None = None
    r_int: float | None = None

    def resolve(self, image_size: tuple[int, int]) -> "PolygonizeParams":
        w, h = image_size
        eps = self.eps if self.eps is not None else DEFAULT_EPS * max(w, h) / REFERENCE_IMAGE_SIDE
        out = PolygonizeParams(
            eps=eps,
            tau_line=self.tau_line,
            l_max=self.l_max if self.l_max is not None else DEFAULT_LMAX_FRACTION * math.hypot(w, h),
            r_int=self.r_int if self.r_int is not None else DEFAULT_RINT_FACTOR * eps,
        )
        out.validate()
        return out

    def validate(self) -> None:
        for name in ("eps", "tau_line", "l_max", "r_int"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v}")


@dataclass
class Diagnostics:
    n_input: int = 0
    n_junction_clusters: int = 0
    n_gap_clusters: int = 0
    n_suggestions: int = 0
    n_pair_intersections: int = 0
    fused: list[tuple[int, int]] = field(default_factory=list)  # (segment id, which)
    dangling: list[int] = field(default_factory=list)
    discarded: list[int] = field(default_factory=list)
    collapsed: list[int] = field(default_factory=list)
    duplicates: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_input": self.n_input,
            "clusters": {"junction": self.n_junction_clusters, "gap": self.n_gap_clusters},
            "suggestions": {"total": self.n_suggestions, "pair_intersections": self.n_pair_intersections},
            "fused_gaps": [list(f) for f in self.fused],
            "dangling_edges": sorted(self.dangling),
            "discarded_segments": sorted(self.discarded),
            "collapsed_segments": sorted(self.collapsed),
            "duplicate_segments": sorted(self.duplicates),
        }


def dbscan(points: np.ndarray, eps: float, min_pts: int = 1) -> np.ndarray:
    """Plain DBSCAN. Returns labels 0..K-1 in order of first appearance, -1 for noise.

    Two points are neighbors when their distance is <= eps; a point counts
    itself toward ``min_pts``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
    nbrs = [np.flatnonzero(row <= eps * eps) for row in d2]
    core = np.array([len(nb) >= min_pts for nb in nbrs], dtype=bool)
    labels = np.full(n, -1, dtype=int)
    visited = np.zeros(n, dtype=bool)
    k = 0
    for i in range(n):
        if visited[i] or not core[i]:
            continue
        visited[i] = True
        labels[i] = k
        stack = [i]
        while stack:
            j = stack.pop()
            for m in nbrs[j]:
                if labels[m] == -1:
                    labels[m] = k
                if not visited[m] and core[m]:
                    visited[m] = True
                    stack.append(m)
        k += 1
    return labels


def _endpoint_array(segments: list[Segment]) -> np.ndarray:
    return np.array([[tuple(s.p0), tuple(s.p1)] for s in segments], dtype=float).reshape(-1, 2)


def cluster_endpoints(segments: list[Segment], eps: float) -> list[Cluster]:
    """Cluster all endpoints; singletons are kept as gap clusters.

    A segment whose two endpoints fall into the same cluster is discarded
    (logged) and clustering is redone without it, so no returned cluster
    references it.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    alive = list(segments)
    while True:
        if not alive:
            return []
        pts = _endpoint_array(alive)
        labels = dbscan(pts, eps)
        lab = labels.reshape(-1, 2)
        short = [s for s, (a, b) in zip(alive, lab) if a == b]
        if not short:
            break
        for s in short:
            log.warning("discarding segment %d: both endpoints within one cluster (eps=%g)", s.id, eps)
        drop = {s.id for s in short}
        alive = [s for s in alive if s.id not in drop]

    clusters: list[Cluster] = []
    for k in range(labels.max() + 1):
        idx = np.flatnonzero(labels == k)
        members = [EndpointRef(alive[i // 2].id, i % 2) for i in idx]
        c = pts[idx].mean(axis=0)
        clusters.append(Cluster(members, Point(float(c[0]), float(c[1]))))
    return clusters


def snap_junctions(
    clusters: list[Cluster],
    segments: list[Segment],
    r_int: float,
) -> tuple[list[Segment], list[SuggestedJunction]]:
    by_id = {s.id: s for s in segments}
    moved = dict(by_id)
    suggested: list[SuggestedJunction] = []
    for ci, cl in enumerate(clusters):
        if cl.kind is not ClusterKind.JUNCTION:
            continue
        for m in cl.members:
            moved[m.segment_id] = moved[m.segment_id].with_endpoint(m.which, cl.centroid)
        suggested.append(SuggestedJunction(cl.centroid, Origin.CLUSTER_CENTROID, ci))
        c = cl.centroid.as_array()
        edge_ids = sorted({m.segment_id for m in cl.members})
        for a, b in itertools.combinations(edge_ids, 2):
            # original geometry: snapping perturbs directions
            p = line_intersection(by_id[a], by_id[b])
            if p is not None and np.hypot(*(p.as_array() - c)) <= r_int:
                suggested.append(SuggestedJunction(p, Origin.PAIR_INTERSECTION, ci))
    out = [moved[s.id] for s in segments]
    return out, suggested


def _gap_candidates(seg: Segment, which: int, suggested: list[SuggestedJunction], tau_line: float, l_max: float):
    x = seg.endpoint(which).as_array()
    other = seg.endpoint(1 - which).as_array()
    u = x - other
    u /= np.hypot(*u)
    best = None
    for si, s in enumerate(suggested):
        d = s.position.as_array() - x
        t = float(d @ u)
        perp = abs(float(d[0] * u[1] - d[1] * u[0]))
        if t < 0 or t > l_max or perp > tau_line:
            continue
        dist = math.hypot(*d)
        if dist == 0:
            continue
        if best is None or dist < best[0]:
            best = (dist, si)
    return None if best is None else best[1]


def complete_gaps(
    segments: list[Segment],
    clusters: list[Cluster],
    suggested: list[SuggestedJunction],
    tau_line: float,
    l_max: float,
    diagnostics: Diagnostics | None = None,
) -> list[Segment]:
    """Fuse every gap endpoint with the nearest suggestion ahead of it on its line.

    Gaps are visited by descending edge length (ties by id). Fusing to a
    pair-intersection suggestion pins its cluster there: the cluster's
    members, and endpoints fused to it earlier, move to that position so the
    junction stays a single vertex. A pinned cluster does not move again.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    cur = {s.id: s for s in segments}
    order = {s.id: i for i, s in enumerate(segments)}
    gaps = [c.members[0] for c in clusters if c.kind is ClusterKind.GAP and c.members[0].segment_id in cur]
    if gaps and not suggested:
        log.info("no suggested junctions; %d gaps stay open", len(gaps))
    gaps.sort(key=lambda m: (-cur[m.segment_id].length, m.segment_id, m.which))

    position = {ci: cl.centroid for ci, cl in enumerate(clusters)}
    attached = {ci: list(cl.members) for ci, cl in enumerate(clusters) if cl.kind is ClusterKind.JUNCTION}
    pinned: set[int] = set()

    def move_cluster(ci: int, p: Point) -> None:
        position[ci] = p
        for m in attached.get(ci, []):
            cur[m.segment_id] = cur[m.segment_id].with_endpoint(m.which, p)

    dangling = set()
    for g in gaps:
        seg = cur[g.segment_id]
        si = _gap_candidates(seg, g.which, suggested, tau_line, l_max)
        if si is None:
            dangling.add(g.segment_id)
            continue
        s = suggested[si]
        ci = s.cluster
        if s.origin is Origin.PAIR_INTERSECTION and ci not in pinned:
            pinned.add(ci)
            move_cluster(ci, s.position)
        elif s.origin is Origin.CLUSTER_CENTROID and ci not in pinned:
            pinned.add(ci)
        target = position[ci]
        if target == seg.endpoint(1 - g.which):
            dangling.add(g.segment_id)
            continue
        cur[g.segment_id] = seg.with_endpoint(g.which, target)
        attached.setdefault(ci, []).append(g)
        diag.fused.append((g.segment_id, g.which))

    diag.dangling = sorted(dangling)
    return sorted(cur.values(), key=lambda s: order[s.id])


def build_graph(segments: list[Segment], snap: float = GRAPH_SNAP, diagnostics: Diagnostics | None = None) -> RoofGraph:
    diag = diagnostics if diagnostics is not None else Diagnostics()
    verts: list[tuple[float, float]] = []
    index: dict[tuple[int, int], int] = {}

    def vid(p: Point) -> int:
        kx, ky = round(p.x / snap), round(p.y / snap)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                j = index.get((kx + dx, ky + dy))
                if j is not None and math.hypot(verts[j][0] - p.x, verts[j][1] - p.y) <= snap:
                    return j
        index[(kx, ky)] = len(verts)
        verts.append((p.x, p.y))
        return len(verts) - 1

    edges: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int]] = set()
    for s in segments:
        a, b = vid(s.p0), vid(s.p1)
        if a == b:
            diag.collapsed.append(s.id)
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            diag.duplicates.append(s.id)
            continue
        seen.add(key)
        edges.append((a, b, s.id))
    return RoofGraph(np.array(verts, dtype=float).reshape(-1, 2), edges)


def polygonize(
    segments: list[Segment],
    image_size: tuple[int, int],
    params: PolygonizeParams | None = None,
) -> tuple[RoofGraph, Diagnostics]:
    """Run the whole complementation on one building."""
    p = (params or PolygonizeParams()).resolve(image_size)
    diag = Diagnostics(n_input=len(segments))
    if not segments:
        return RoofGraph(np.zeros((0, 2)), []), diag
    clusters = cluster_endpoints(segments, p.eps)
    kept = {m.segment_id for c in clusters for m in c.members}
    diag.discarded = [s.id for s in segments if s.id not in kept]
    alive = [s for s in segments if s.id in kept]
    diag.n_junction_clusters = sum(c.kind is ClusterKind.JUNCTION for c in clusters)
    diag.n_gap_clusters = len(clusters) - diag.n_junction_clusters
    snapped, suggested = snap_junctions(clusters, alive, p.r_int)
    diag.n_suggestions = len(suggested)
    diag.n_pair_intersections = sum(s.origin is Origin.PAIR_INTERSECTION for s in suggested)
    completed = complete_gaps(snapped, clusters, suggested, p.tau_line, p.l_max, diag)
    graph = build_graph(completed, diagnostics=diag)
    diag.dangling = sorted(set(diag.dangling) | set(graph.dangling_edges()))
    return graph, diag
