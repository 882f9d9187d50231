"""Planar primitives shared by the whole pipeline.

Coordinates are image pixels, x to the right and y down. Predicates are
tolerance based; nothing here attempts exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ANGLE_EPS = 1e-6


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True, slots=True)
class Segment:
    id: int
    p0: Point
    p1: Point

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"segment id must be >= 0, got {self.id}")
        if self.p0 == self.p1:
            raise ValueError(f"segment {self.id} has zero length")

    @classmethod
    def from_coords(cls, id: int, x0: float, y0: float, x1: float, y1: float) -> "Segment":
        return cls(id, Point(float(x0), float(y0)), Point(float(x1), float(y1)))

    @property
    def length(self) -> float:
        return math.hypot(self.p1.x - self.p0.x, self.p1.y - self.p0.y)

    @property
    def midpoint(self) -> Point:
        return Point(0.5 * (self.p0.x + self.p1.x), 0.5 * (self.p0.y + self.p1.y))

    def endpoint(self, which: int) -> Point:
        return self.p0 if which == 0 else self.p1

    def with_endpoint(self, which: int, p: Point) -> "Segment":
        return Segment(self.id, p, self.p1) if which == 0 else Segment(self.id, self.p0, p)

    def as_array(self) -> np.ndarray:
        return np.array([[self.p0.x, self.p0.y], [self.p1.x, self.p1.y]], dtype=float)


@dataclass(frozen=True, slots=True)
class OrientedBox:
    """Rotated rectangle around one roof edge.

    ``w`` is the extent along ``theta``. Construction swaps the extents (and
    turns ``theta`` by a quarter) whenever ``h > w``, then folds ``theta`` into
    ``[0, pi)``.
    """

    cx: float
    cy: float
    w: float
    h: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        vals = (self.cx, self.cy, self.w, self.h, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box parameters {vals}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extents must be positive, got w={self.w}, h={self.h}")
        w, h, theta = self.w, self.h, self.theta
        if h > w:
            w, h, theta = h, w, theta + math.pi / 2
        theta = math.fmod(theta, math.pi)
        if theta < 0:
            theta += math.pi
        if theta >= math.pi:
            theta = 0.0
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "theta", theta)

    def corners(self) -> np.ndarray:
        """Corners in rotation order, shape (4, 2)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        u = np.array([c, s]) * self.w / 2
        v = np.array([-s, c]) * self.h / 2
        ctr = np.array([self.cx, self.cy])
        return np.array([ctr - u - v, ctr + u - v, ctr + u + v, ctr - u + v])


@dataclass(frozen=True, slots=True)
class BoundingBox:
    min: Point
    max: Point

    def __post_init__(self) -> None:
        if self.min.x > self.max.x or self.min.y > self.max.y:
            raise ValueError("bounding box min exceeds max")

    @classmethod
    def of(cls, pts: np.ndarray) -> "BoundingBox":
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            raise ValueError("bounding box of an empty point set")
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return cls(Point(float(lo[0]), float(lo[1])), Point(float(hi[0]), float(hi[1])))

    @property
    def diagonal(self) -> float:
        return math.hypot(self.max.x - self.min.x, self.max.y - self.min.y)


def obb_to_segment(box: OrientedBox, id: int = 0) -> Segment:
    half = box.w / 2
    dx, dy = half * math.cos(box.theta), half * math.sin(box.theta)
    return Segment(id, Point(box.cx - dx, box.cy - dy), Point(box.cx + dx, box.cy + dy))


def segment_to_obb(seg: Segment, thickness: float) -> OrientedBox:
    if not thickness > 0:
        raise ValueError(f"thickness must be positive, got {thickness}")
    length = seg.length
    if length == 0:
        raise ValueError(f"segment {seg.id} is degenerate")
    mid = seg.midpoint
    theta = math.atan2(seg.p1.y - seg.p0.y, seg.p1.x - seg.p0.x)
    # thickness > length flips the major axis on construction; callers keep boxes thin
    return OrientedBox(mid.x, mid.y, length, thickness, theta)


def line_intersection(a: Segment, b: Segment, angle_eps: float = ANGLE_EPS) -> Point | None:
    """Intersection of the infinite lines through ``a`` and ``b``."""
    p, q = a.as_array(), b.as_array()
    r, s = p[1] - p[0], q[1] - q[0]
    denom = r[0] * s[1] - r[1] * s[0]
    if abs(denom) <= math.sin(angle_eps) * np.hypot(*r) * np.hypot(*s):
        return None
    d = q[0] - p[0]
    t = (d[0] * s[1] - d[1] * s[0]) / denom
    x, y = p[0] + t * r
    return Point(float(x), float(y))


def points_to_segments_distance(points: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Distance from each of ``points`` (n, 2) to the nearest of ``segs`` (m, 2, 2)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    segs = np.asarray(segs, dtype=float).reshape(-1, 2, 2)
    if len(segs) == 0:
        raise ValueError("distance to an empty polyline")
    a = segs[:, 0][None, :, :]
    ab = (segs[:, 1] - segs[:, 0])[None, :, :]
    ap = pts[:, None, :] - a
    denom = np.einsum("...k,...k->...", ab, ab)
    t = np.einsum("...k,...k->...", ap, ab) / np.where(denom > 0, denom, 1.0)
    t = np.clip(t, 0.0, 1.0)
    diff = ap - t[..., None] * ab
    return np.sqrt(np.einsum("...k,...k->...", diff, diff)).min(axis=1)


def point_to_polyline_distance(p: Point, poly: Sequence[Segment]) -> float:
    if not poly:
        raise ValueError("distance to an empty polyline")
    segs = np.stack([s.as_array() for s in poly])
    return float(points_to_segments_distance(p.as_array(), segs)[0])


def _as_points(pts) -> np.ndarray:
    if isinstance(pts, np.ndarray):
        return pts.reshape(-1, 2).astype(float)
    return np.array([tuple(p) for p in pts], dtype=float).reshape(-1, 2)


def joint_bbox_diagonal(p: Iterable, r: Iterable) -> float:
    a, b = _as_points(p), _as_points(r)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("joint bounding box needs two non-empty point sets")
    d = BoundingBox.of(np.vstack([a, b])).diagonal
    if d <= 0:
        raise ValueError("degenerate joint bounding box (zero diagonal)")
    return d


def signed_area(ring: np.ndarray) -> float:
    """Shoelace area; positive for counterclockwise in the (x, y) frame."""
    ring = np.asarray(ring, dtype=float)
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def point_in_polygon(pt: tuple[float, float], ring: np.ndarray) -> bool:
    """Crossing-number test with the half-open rule used by ``fill_polygon``."""
    px, py = pt
    ring = np.asarray(ring, dtype=float)
    a, b = ring, np.roll(ring, -1, axis=0)
    cross = (a[:, 1] > py) != (b[:, 1] > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a[:, 0] + (py - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
    return bool(np.count_nonzero(cross & (px < xint)) % 2)


def fill_polygon(ring: np.ndarray, width: int, height: int) -> np.ndarray:
    """Boolean (height, width) mask of pixels whose integer center lies inside ``ring``.

    Half-open crossing rule: left/top boundaries are in, right/bottom out, so
    faces sharing an edge never share a pixel.
    """
    ring = np.asarray(ring, dtype=float)
    mask = np.zeros((height, width), dtype=bool)
    x0 = max(int(math.floor(ring[:, 0].min())), 0)
    x1 = min(int(math.ceil(ring[:, 0].max())), width - 1)
    y0 = max(int(math.floor(ring[:, 1].min())), 0)
    y1 = min(int(math.ceil(ring[:, 1].max())), height - 1)
    if x0 > x1 or y0 > y1:
        return mask
    xs = np.arange(x0, x1 + 1, dtype=float)
    inside = np.zeros((y1 - y0 + 1, len(xs)), dtype=bool)
    a, b = ring, np.roll(ring, -1, axis=0)
    for row, py in enumerate(np.arange(y0, y1 + 1, dtype=float)):
        cross = (a[:, 1] > py) != (b[:, 1] > py)
        if not cross.any():
            continue
        ac, bc = a[cross], b[cross]
        xint = ac[:, 0] + (py - ac[:, 1]) * (bc[:, 0] - ac[:, 0]) / (bc[:, 1] - ac[:, 1])
        inside[row] = (np.count_nonzero(xs[:, None] < xint[None, :], axis=1) % 2).astype(bool)
    mask[y0 : y1 + 1, x0 : x1 + 1] = inside
    return mask
