"""Detector output parsing and result serialization.

Three text formats live here:

* YOLO-OBB detections, one box per line, either ``class cx cy w h theta [conf]``
  or ``class x1 y1 x2 y2 x3 y3 x4 y4 [conf]``. Coordinates are normalized to
  [0, 1]; ``w`` scales with the image width and ``h`` with the height.
* A segments document (JSON) with ``image_size`` and ``segments``.
* Faces as a GeoJSON FeatureCollection in pixel coordinates (y down).
"""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .geom import OrientedBox, Segment, obb_to_segment, segment_to_obb

log = logging.getLogger(__name__)

DEFAULT_CONF_CUTOFF = 0.25
DEFAULT_LABEL_THICKNESS = 6.0
OVERSHOOT = 0.1
SNAP = 1e-6


class ParseError(ValueError):
    """Malformed input document; ``line`` is 1-based when known."""

    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass
class FaceSet:
    """Closed vertex cycles over a shared vertex array.

    ``vertices`` has shape (n, 2). ``faces[k]`` lists vertex indices of face k
    in counterclockwise order (positive shoelace area in the x-right/y-down
    frame) and ``face_edge_ids[k]`` the edge ids along it.
    """

    vertices: np.ndarray
    faces: list[list[int]] = field(default_factory=list)
    face_edge_ids: list[list[int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        self.faces = [list(map(int, f)) for f in self.faces]
        if not self.face_edge_ids:
            self.face_edge_ids = [[] for _ in self.faces]
        self.face_edge_ids = [list(map(int, e)) for e in self.face_edge_ids]
        if len(self.face_edge_ids) != len(self.faces):
            raise ValueError("face_edge_ids must align with faces")
        n = len(self.vertices)
        for k, f in enumerate(self.faces):
            if len(set(f)) < 3:
                raise ValueError(f"face {k} has fewer than 3 distinct vertices")
            if any(i < 0 or i >= n for i in f):
                raise ValueError(f"face {k} references a vertex out of range")
            if any(f[i] == f[(i + 1) % len(f)] for i in range(len(f))):
                raise ValueError(f"face {k} repeats a vertex consecutively")

    def __len__(self) -> int:
        return len(self.faces)

    @classmethod
    def empty(cls) -> "FaceSet":
        return cls(np.zeros((0, 2)))

    def ring(self, k: int) -> np.ndarray:
        return self.vertices[self.faces[k]]

    def rings(self) -> list[np.ndarray]:
        return [self.ring(k) for k in range(len(self.faces))]

    def unique_edges(self) -> list[tuple[int, int]]:
        """Undirected vertex-index pairs in first-seen order."""
        seen: dict[tuple[int, int], None] = {}
        for f in self.faces:
            for a, b in zip(f, f[1:] + f[:1]):
                seen.setdefault((min(a, b), max(a, b)), None)
        return list(seen)


@dataclass
class BuildingInput:
    building_id: str
    image_size: tuple[int, int]
    segments: list[Segment]
    boxes: list[OrientedBox] | None = None
    reference: FaceSet | None = None

    def __post_init__(self) -> None:
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise ValueError(f"image size must be positive, got {self.image_size}")
        self.image_size = (int(w), int(h))
        lo_x, hi_x = -OVERSHOOT * w, (1 + OVERSHOOT) * w
        lo_y, hi_y = -OVERSHOOT * h, (1 + OVERSHOOT) * h
        for s in self.segments:
            for p in (s.p0, s.p1):
                if not (lo_x <= p.x <= hi_x and lo_y <= p.y <= hi_y):
                    raise ValueError(f"segment {s.id} endpoint ({p.x}, {p.y}) lies outside the image")


def _floats(tokens: Sequence[str], lineno: int) -> list[float]:
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"non-numeric token ({exc})", lineno) from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("non-finite value", lineno)
    return vals


def box_from_corners(corners: np.ndarray) -> OrientedBox:
    """Fit an oriented box to a (possibly skewed) corner quad via its principal axis."""
    pts = np.asarray(corners, dtype=float).reshape(-1, 2)
    ctr = pts.mean(axis=0)
    d = pts - ctr
    evals, evecs = np.linalg.eigh(d.T @ d)
    major = evecs[:, np.argmax(evals)]
    minor = np.array([-major[1], major[0]])
    u, v = d @ major, d @ minor
    w, h = float(u.max() - u.min()), float(v.max() - v.min())
    # re-center on the extent midpoints, which equals the centroid for true rectangles
    ctr = ctr + major * (u.max() + u.min()) / 2 + minor * (v.max() + v.min()) / 2
    return OrientedBox(float(ctr[0]), float(ctr[1]), w, h, math.atan2(major[1], major[0]))


def parse_obb_detections(
    stream: IO[str] | str,
    image_size: tuple[int, int],
    building_id: str = "",
    conf_cutoff: float = DEFAULT_CONF_CUTOFF,
) -> BuildingInput:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    W, H = image_size
    boxes: list[OrientedBox] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        n = len(tokens)
        if n not in (6, 7, 9, 10):
            raise ParseError(f"expected 6, 7, 9 or 10 tokens, got {n}", lineno)
        vals = _floats(tokens[1:], lineno)
        conf = vals[-1] if n in (7, 10) else 1.0
        if conf < conf_cutoff:
            continue
        try:
            if n in (6, 7):
                cx, cy, w, h, theta = vals[:5]
                boxes.append(OrientedBox(cx * W, cy * H, w * W, h * H, theta))
            else:
                corners = np.array(vals[:8]).reshape(4, 2) * [W, H]
                boxes.append(box_from_corners(corners))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    segments = [obb_to_segment(b, i) for i, b in enumerate(boxes)]
    return BuildingInput(building_id, (W, H), segments, boxes=boxes)


def parse_segments(doc: str | dict) -> BuildingInput:
    data = json.loads(doc) if isinstance(doc, str) else doc
    try:
        size = data["image_size"]
        raw = data["segments"]
    except (KeyError, TypeError):
        raise ParseError("segments document needs 'image_size' and 'segments'") from None
    segments = []
    for i, pair in enumerate(raw):
        try:
            (x0, y0), (x1, y1) = pair
        except (TypeError, ValueError):
            raise ParseError(f"segment {i} is not a [[x0, y0], [x1, y1]] pair") from None
        if (x0, y0) == (x1, y1):
            raise ParseError(f"segment {i} has zero length")
        segments.append(Segment.from_coords(i, x0, y0, x1, y1))
    reference = faces_from_geojson(data["reference"])[0] if data.get("reference") else None
    return BuildingInput(str(data.get("building_id", "")), tuple(size), segments, reference=reference)


def export_segments(building: BuildingInput) -> str:
    doc = {
        "building_id": building.building_id,
        "image_size": list(building.image_size),
        "segments": [[[s.p0.x, s.p0.y], [s.p1.x, s.p1.y]] for s in building.segments],
    }
    return json.dumps(doc, indent=1)


def faces_to_geojson(fs: FaceSet, building_id: str, image_size: tuple[int, int] | None = None) -> dict:
    features = []
    for k, f in enumerate(fs.faces):
        if len(f) < 3:
            raise ValueError(f"face {k} has fewer than 3 vertices")
        ring = [[float(x), float(y)] for x, y in fs.vertices[f]]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring + [ring[0]]]},
                "properties": {
                    "building_id": building_id,
                    "face": k,
                    "edge_ids": list(fs.face_edge_ids[k]),
                    "vertex_ids": list(f),
                },
            }
        )
    doc: dict = {"type": "FeatureCollection", "building_id": building_id, "features": features}
    if image_size is not None:
        doc["image_size"] = list(image_size)
    return doc


def export_faces_geojson(fs: FaceSet, building_id: str, image_size: tuple[int, int] | None = None) -> str:
    return json.dumps(faces_to_geojson(fs, building_id, image_size), indent=1)


def _vertex_index(key_to_idx: dict, verts: list, xy: tuple[float, float]) -> int:
    key = (round(xy[0] / SNAP), round(xy[1] / SNAP))
    if key not in key_to_idx:
        key_to_idx[key] = len(verts)
        verts.append(xy)
    return key_to_idx[key]


def faces_from_geojson(doc: str | dict) -> tuple[FaceSet, str, tuple[int, int] | None]:
    """Inverse of ``export_faces_geojson``.

    Uses the ``vertex_ids`` property when every feature carries one; otherwise
    vertices are shared by coordinate (snapped at 1e-6 px).
    """
    data = json.loads(doc) if isinstance(doc, str) else doc
    if data.get("type") != "FeatureCollection":
        raise ParseError("expected a GeoJSON FeatureCollection")
    feats = data.get("features", [])
    rings = []
    for k, feat in enumerate(feats):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Polygon":
            raise ParseError(f"feature {k} is not a Polygon")
        ring = [tuple(map(float, c[:2])) for c in geom["coordinates"][0]]
        if len(ring) > 1 and ring[0] == ring[-1]:
            ring = ring[:-1]
        rings.append(ring)
    props = [f.get("properties") or {} for f in feats]
    edge_ids = [list(p.get("edge_ids", [])) for p in props]
    if feats and all("vertex_ids" in p for p in props):
        n = 1 + max((max(p["vertex_ids"]) for p in props if p["vertex_ids"]), default=-1)
        verts = np.full((n, 2), np.nan)
        faces = []
        for ring, p in zip(rings, props):
            ids = list(p["vertex_ids"])
            if len(ids) != len(ring):
                raise ParseError("vertex_ids length does not match ring")
            verts[ids] = ring
            faces.append(ids)
        if np.isnan(verts).any():
            # unused ids: compact them away
            used = sorted({i for f in faces for i in f})
            remap = {old: new for new, old in enumerate(used)}
            verts = verts[used]
            faces = [[remap[i] for i in f] for f in faces]
    else:
        key_to_idx: dict = {}
        vlist: list = []
        faces = [[_vertex_index(key_to_idx, vlist, xy) for xy in ring] for ring in rings]
        verts = np.array(vlist, dtype=float).reshape(-1, 2)
    size = tuple(data["image_size"]) if "image_size" in data else None
    bid = str(data.get("building_id") or (props[0].get("building_id", "") if props else ""))
    return FaceSet(verts, faces, edge_ids), bid, size


def _edge_key(a: np.ndarray, b: np.ndarray) -> tuple:
    ka = (round(a[0] / SNAP), round(a[1] / SNAP))
    kb = (round(b[0] / SNAP), round(b[1] / SNAP))
    return (ka, kb) if ka <= kb else (kb, ka)


def unique_face_segments(fs: FaceSet) -> list[Segment]:
    """Every undirected face edge once, deduplicated by snapped endpoint pair."""
    seen: dict[tuple, Segment] = {}
    for ring in fs.rings():
        for a, b in zip(ring, np.roll(ring, -1, axis=0)):
            key = _edge_key(a, b)
            if key not in seen:
                seen[key] = Segment.from_coords(len(seen), a[0], a[1], b[0], b[1])
    return list(seen.values())


def export_training_labels(
    fs: FaceSet,
    image_size: tuple[int, int],
    thickness: float = DEFAULT_LABEL_THICKNESS,
    cls: int = 0,
) -> list[str]:
    """One normalized ``class cx cy w h theta`` line per unique face edge."""
    if not thickness > 0:
        raise ValueError(f"thickness must be positive, got {thickness}")
    W, H = image_size
    lines = []
    for seg in unique_face_segments(fs):
        b = segment_to_obb(seg, thickness)
        vals = [min(max(v, 0.0), 1.0) for v in (b.cx / W, b.cy / H, b.w / W, b.h / H)]
        lines.append(f"{cls} " + " ".join(f"{v:.9f}" for v in vals) + f" {b.theta:.12f}")
    return lines


def boxes_from_segments(segments: Iterable[Segment], thickness: float = DEFAULT_LABEL_THICKNESS) -> list[OrientedBox]:
    return [segment_to_obb(s, thickness) for s in segments]


def export_obb_detections(boxes: Iterable[OrientedBox], image_size: tuple[int, int], cls: int = 0) -> str:
    W, H = image_size
    return "".join(
        f"{cls} {b.cx / W:.12f} {b.cy / H:.12f} {b.w / W:.12f} {b.h / H:.12f} {b.theta:.12f}\n" for b in boxes
    )
