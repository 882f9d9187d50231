"""Synthetic roofs with known topology, plus a detector-like corruption model.

Templates (all axis-aligned footprints, optionally rotated about their center):

=============  =====  =====  ===================================================
kind           faces  edges  construction
=============  =====  =====  ===================================================
flat-rect      1      4      one rectangle
gable          2      7      ridge along the long axis, gable ends split at it
hip            4      9      45 degree hips from each corner to the ridge ends
L-shape        2      8      main rectangle plus a wing below its left part
cross-gable    4      15     main gable plus a perpendicular gable wing whose
                             ridge meets two 45 degree valleys
=============  =====  =====  ===================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom import Segment, signed_area
from .ingest import FaceSet

KINDS = ("flat-rect", "gable", "hip", "cross-gable", "L-shape")
FACE_COUNT = {"flat-rect": 1, "gable": 2, "hip": 4, "L-shape": 2, "cross-gable": 4}
MIN_SIDE = 32.0

Rect = tuple[float, float, float, float]  # x, y, w, h


@dataclass(frozen=True)
class RoofTemplate:
    kind: str
    footprint: tuple[Rect, ...]
    seed: int = 0
    rotation: float = 0.0  # radians about the main rectangle's center

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown roof kind {self.kind!r}; expected one of {KINDS}")
        need = 2 if self.kind in ("L-shape", "cross-gable") else 1
        if len(self.footprint) != need:
            raise ValueError(f"{self.kind} needs {need} footprint rectangle(s), got {len(self.footprint)}")
        for x, y, w, h in self.footprint:
            if min(w, h) < MIN_SIDE:
                raise ValueError(f"footprint {w}x{h} too small for {self.kind} (sides must be >= {MIN_SIDE:g} px)")


@dataclass
class CorruptionSpec:
    truncate_px: float = 0.0
    jitter_sigma: float = 0.0
    drop_prob: float = 0.0
    angle_jitter: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.truncate_px < 0 or self.jitter_sigma < 0 or self.angle_jitter < 0:
            raise ValueError("corruption magnitudes must be >= 0")
        if not 0 <= self.drop_prob < 1:
            raise ValueError(f"drop_prob must lie in [0, 1), got {self.drop_prob}")


def _flat(W, H):
    return [(0, 0), (W, 0), (W, H), (0, H)], [[0, 1, 2, 3]]


def _gable(W, H):
    v = [(0, 0), (W, 0), (W, H / 2), (W, H), (0, H), (0, H / 2)]
    return v, [[0, 1, 2, 5], [5, 2, 3, 4]]


def _hip(W, H):
    r = H / 2
    if W - H < MIN_SIDE / 2:
        raise ValueError(f"hip footprint {W}x{H} leaves a ridge shorter than {MIN_SIDE / 2:g} px")
    v = [(0, 0), (W, 0), (W, H), (0, H), (r, r), (W - r, r)]
    return v, [[0, 1, 5, 4], [1, 2, 5], [2, 3, 4, 5], [3, 0, 4]]


def _long_axis_x(builder, W, H):
    """Build with the ridge on x, transposing when the footprint is taller than wide."""
    if W >= H:
        return builder(W, H)
    v, f = builder(H, W)
    return [(y, x) for x, y in v], f


def _l_shape(main: Rect, wing: Rect):
    (x, y, W, h1), (wx, wy, w2, h2) = main, wing
    if not (math.isclose(wx, x) and math.isclose(wy, y + h1) and w2 <= W - MIN_SIDE / 2):
        raise ValueError("L-shape wing must hang below the main rectangle, flush left and narrower")
    v = [(0, 0), (W, 0), (W, h1), (w2, h1), (w2, h1 + h2), (0, h1 + h2), (0, h1)]
    return v, [[0, 1, 2, 3, 6], [6, 3, 4, 5]]


def _cross_gable(main: Rect, wing: Rect):
    (x, y, W, H), (wx, wy, w, L) = main, wing
    a = wx - x
    if not (math.isclose(wy, y + H) and a >= MIN_SIDE / 2 and W - a - w >= MIN_SIDE / 2 and w <= H - MIN_SIDE / 2):
        raise ValueError("cross-gable wing must hang below the main rectangle, inset on both sides and narrower than its depth")
    v = [
        (0, 0), (W, 0), (W, H / 2), (W, H), (a + w, H), (a + w / 2, H - w / 2),
        (a, H), (0, H), (0, H / 2), (a, H + L), (a + w / 2, H + L), (a + w, H + L),
    ]
    return v, [[0, 1, 2, 8], [8, 2, 3, 4, 5, 6, 7], [6, 5, 10, 9], [5, 4, 11, 10]]


def generate(template: RoofTemplate) -> tuple[FaceSet, list[Segment]]:
    """Ground-truth faces and the perfect edge list (unique undirected face edges)."""
    main = template.footprint[0]
    x0, y0, W, H = main
    if template.kind == "flat-rect":
        v, faces = _flat(W, H)
    elif template.kind == "gable":
        v, faces = _long_axis_x(_gable, W, H)
    elif template.kind == "hip":
        v, faces = _long_axis_x(_hip, W, H)
    elif template.kind == "L-shape":
        v, faces = _l_shape(main, template.footprint[1])
    else:
        v, faces = _cross_gable(main, template.footprint[1])
    verts = np.array(v, dtype=float) + [x0, y0]
    if template.rotation:
        c = np.array([x0 + W / 2, y0 + H / 2])
        cs, sn = math.cos(template.rotation), math.sin(template.rotation)
        verts = (verts - c) @ np.array([[cs, sn], [-sn, cs]]) + c
    faces = [f if signed_area(verts[f]) > 0 else f[::-1] for f in faces]

    edge_id: dict[tuple[int, int], int] = {}
    face_eids = []
    for f in faces:
        ids = []
        for a, b in zip(f, f[1:] + f[:1]):
            key = (min(a, b), max(a, b))
            ids.append(edge_id.setdefault(key, len(edge_id)))
        face_eids.append(ids)
    segments = [Segment.from_coords(i, *verts[a], *verts[b]) for (a, b), i in edge_id.items()]
    return FaceSet(verts, faces, face_eids), segments


def corrupt(edges: list[Segment], spec: CorruptionSpec) -> list[Segment]:
    """Apply truncation, dropout, angular and endpoint noise.

    Each edge draws from its own stream seeded by ``(spec.seed, edge.id)``,
    so decisions for one edge do not depend on the others.
    """
    out = []
    t = spec.truncate_px
    for e in edges:
        rng = np.random.default_rng([spec.seed, e.id])
        u_drop = rng.random()
        dtheta = rng.normal(0.0, spec.angle_jitter) if spec.angle_jitter else 0.0
        noise = rng.normal(0.0, spec.jitter_sigma, size=(2, 2)) if spec.jitter_sigma else np.zeros((2, 2))
        if e.length < 2 * t + 1 or u_drop < spec.drop_prob:
            continue
        p = e.as_array()
        if t:
            u = (p[1] - p[0]) / e.length
            p = np.array([p[0] + t * u, p[1] - t * u])
        if dtheta:
            mid = p.mean(axis=0)
            cs, sn = math.cos(dtheta), math.sin(dtheta)
            p = (p - mid) @ np.array([[cs, sn], [-sn, cs]]) + mid
        p = p + noise
        out.append(Segment.from_coords(e.id, *p[0], *p[1]))
    return out


def random_template(kind: str, seed: int, image_size: int = 1024, rotate: bool = False) -> RoofTemplate:
    """A template of ``kind`` with footprint proportions drawn from ``seed``.

    The roof fills most of the patch, as in single-building crops. With
    ``rotate`` the footprint shrinks to 70 % and turns by a uniform angle in
    [0, pi/2) about its center.
    """
    rng = np.random.default_rng([seed, KINDS.index(kind)])
    S = float(image_size)

    def r(lo, hi):
        return float(round(rng.uniform(lo, hi) * S))

    rot = float(rng.uniform(0, math.pi / 2)) if rotate else 0.0
    # a rotated footprint must still fit inside the patch
    S = S * (0.7 if rotate else 1.0)
    off = float(image_size) / 2 - S / 2
    if kind in ("flat-rect", "gable"):
        W, H = r(0.5, 0.8), r(0.35, 0.6)
        rects = ((round(off + (S - W) / 2), round(off + (S - H) / 2), W, H),)
    elif kind == "hip":
        H = r(0.35, 0.5)
        W = H + r(0.15, 0.3)
        rects = ((round(off + (S - W) / 2), round(off + (S - H) / 2), W, H),)
    elif kind == "L-shape":
        W, h1 = r(0.55, 0.8), r(0.3, 0.4)
        w2, h2 = round(W * rng.uniform(0.35, 0.6)), r(0.2, 0.35)
        x, y = round(off + (S - W) / 2), round(off + (S - h1 - h2) / 2)
        rects = ((x, y, W, h1), (x, y + h1, w2, h2))
    else:
        W, H = r(0.6, 0.8), r(0.35, 0.45)
        w = round(H * rng.uniform(0.4, 0.75))
        a = round((W - w) * rng.uniform(0.2, 0.8))
        L = r(0.15, 0.3)
        x, y = round(off + (S - W) / 2), round(off + (S - H - L) / 2)
        rects = ((x, y, W, H), (x + a, y + H, w, L))
    return RoofTemplate(kind, rects, seed, rot)


@dataclass
class SyntheticCase:
    building_id: str
    template: RoofTemplate
    truth: FaceSet
    edges: list[Segment]
    image_size: tuple[int, int] = field(default=(1024, 1024))


def synthetic_suite(seeds, image_size: int = 1024, kinds=KINDS, rotate: bool = False) -> list[SyntheticCase]:
    cases = []
    for kind in kinds:
        for seed in seeds:
            t = random_template(kind, seed, image_size, rotate)
            truth, edges = generate(t)
            cases.append(SyntheticCase(f"{kind}_{seed:04d}", t, truth, edges, (image_size, image_size)))
    return cases
