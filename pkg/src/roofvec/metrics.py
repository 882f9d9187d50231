"""Raster and vector evaluation of predicted faces against reference faces.

Raster level: per-face IoU against the best-overlapping prediction (mIoU)
and whole-roof IoU (ovIoU). Vector level: Hausdorff and PolyS distances
between the face boundaries, normalized by the joint bounding-box diagonal.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence, Union

import numpy as np

from .geom import fill_polygon, joint_bbox_diagonal, points_to_segments_distance
from .ingest import FaceSet

PolygonsLike = Union[FaceSet, Sequence[np.ndarray]]

POLYS_MODES = ("rmse", "printed", "max")


@dataclass
class Boundary:
    vertices: np.ndarray  # (n, 2) distinct vertices
    segments: np.ndarray  # (m, 2, 2) distinct edges


def as_boundary(obj: PolygonsLike | Boundary) -> Boundary:
    """Union of all face rings; shared vertices and edges counted once."""
    if isinstance(obj, Boundary):
        return obj
    if isinstance(obj, FaceSet):
        used = sorted({i for f in obj.faces for i in f})
        verts = obj.vertices[used].reshape(-1, 2)
        segs = np.array([[obj.vertices[a], obj.vertices[b]] for a, b in obj.unique_edges()]).reshape(-1, 2, 2)
        return Boundary(verts, segs)
    rings = [np.asarray(r, dtype=float).reshape(-1, 2) for r in obj]
    verts: dict[tuple[float, float], None] = {}
    segs: dict[tuple, np.ndarray] = {}
    for r in rings:
        for p in r:
            verts.setdefault((p[0], p[1]), None)
        for a, b in zip(r, np.roll(r, -1, axis=0)):
            ka, kb = (a[0], a[1]), (b[0], b[1])
            segs.setdefault(min(ka, kb) + max(ka, kb), np.array([a, b]))
    return Boundary(np.array(list(verts), dtype=float).reshape(-1, 2), np.array(list(segs.values())).reshape(-1, 2, 2))


def _check(b: Boundary, name: str) -> None:
    if len(b.vertices) == 0 or len(b.segments) == 0:
        raise ValueError(f"{name} boundary is empty")


def directed_distances(src: Boundary, dst: Boundary) -> np.ndarray:
    """Distance from every vertex of ``src`` to the continuous boundary of ``dst``."""
    return points_to_segments_distance(src.vertices, dst.segments)


def hausdorff(pred: PolygonsLike | Boundary, ref: PolygonsLike | Boundary) -> float:
    p, r = as_boundary(pred), as_boundary(ref)
    _check(p, "prediction")
    _check(r, "reference")
    return float(max(directed_distances(p, r).max(), directed_distances(r, p).max()))


def polys(pred: PolygonsLike | Boundary, ref: PolygonsLike | Boundary, mode: str = "rmse") -> float:
    """PolyS distance.

    ``rmse``: mean of the two directed RMSEs. ``printed``: the same without
    dividing by the vertex counts. ``max``: the larger directed RMSE.
    """
    if mode not in POLYS_MODES:
        raise ValueError(f"unknown PolyS mode {mode!r}")
    p, r = as_boundary(pred), as_boundary(ref)
    _check(p, "prediction")
    _check(r, "reference")
    dp, dr = directed_distances(p, r), directed_distances(r, p)
    if mode == "printed":
        return float(0.5 * math.sqrt(np.sum(dp**2)) + 0.5 * math.sqrt(np.sum(dr**2)))
    ep, er = math.sqrt(np.mean(dp**2)), math.sqrt(np.mean(dr**2))
    return float(max(ep, er) if mode == "max" else 0.5 * (ep + er))


def quality(d: float, d_max: float) -> float:
    if not d_max > 0:
        raise ValueError(f"d_max must be positive, got {d_max}")
    return max(0.0, 1.0 - d / d_max)


def qvm(miou_value: float, q_h: float) -> float:
    return miou_value * q_h


def face_masks(faces: PolygonsLike, grid_size: tuple[int, int]) -> list[np.ndarray]:
    w, h = grid_size
    rings = faces.rings() if isinstance(faces, FaceSet) else [np.asarray(r, dtype=float) for r in faces]
    return [fill_polygon(r, w, h) for r in rings]


def _union(masks: list[np.ndarray], grid_size: tuple[int, int]) -> np.ndarray:
    w, h = grid_size
    out = np.zeros((h, w), dtype=bool)
    for m in masks:
        out |= m
    return out


def miou(pred: PolygonsLike, ref: PolygonsLike, grid_size: tuple[int, int]):
    """Mean over reference faces of IoU with their best-overlapping prediction.

    Returns ``(per_face, miou)`` where ``per_face`` holds
    ``(ref index, pred index or None, IoU)``. Several references may pick
    the same prediction.
    """
    rm = face_masks(ref, grid_size)
    if not rm:
        raise ValueError("reference has no faces")
    pm = face_masks(pred, grid_size)
    per_face = []
    for i, a in enumerate(rm):
        best_j, best_ov = None, 0
        for j, b in enumerate(pm):
            ov = int(np.count_nonzero(a & b))
            if ov > best_ov:
                best_j, best_ov = j, ov
        if best_j is None:
            per_face.append((i, None, 0.0))
            continue
        union = int(np.count_nonzero(a | pm[best_j]))
        per_face.append((i, best_j, best_ov / union))
    return per_face, float(np.mean([t[2] for t in per_face]))


def oviou(pred: PolygonsLike, ref: PolygonsLike, grid_size: tuple[int, int]) -> float:
    P = _union(face_masks(pred, grid_size), grid_size)
    R = _union(face_masks(ref, grid_size), grid_size)
    union = int(np.count_nonzero(P | R))
    if union == 0:
        raise ValueError("both roof masks are empty")
    return int(np.count_nonzero(P & R)) / union


@dataclass
class EvalReport:
    building_id: str
    per_face_iou: list[tuple[int, int | None, float]]
    miou: float
    oviou: float
    d_h: float
    d_p: float
    d_max: float
    q_h: float
    q_p: float
    q_vm: float
    n_pred: int = 0
    n_ref: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_face_iou"] = [list(t) for t in self.per_face_iou]
        for k in ("d_h", "d_p"):
            if not math.isfinite(d[k]):
                d[k] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        d = dict(d)
        d["per_face_iou"] = [tuple(t) for t in d["per_face_iou"]]
        for k in ("d_h", "d_p"):
            if d[k] is None:
                d[k] = math.inf
        return cls(**d)


CSV_COLUMNS = ("building_id", "n_ref", "n_pred", "miou", "oviou", "d_h", "d_p", "d_max", "q_h", "q_p", "q_vm")


def evaluate(
    pred: FaceSet,
    ref: FaceSet,
    grid_size: tuple[int, int],
    building_id: str = "",
    polys_mode: str = "rmse",
) -> EvalReport:
    """All building-level metrics. An empty prediction scores 0 everywhere."""
    per_face, m = miou(pred, ref, grid_size)
    ov = oviou(pred, ref, grid_size) if len(pred) else 0.0
    rb = as_boundary(ref)
    if len(pred):
        pb = as_boundary(pred)
        d_max = joint_bbox_diagonal(pb.vertices, rb.vertices)
        d_h, d_p = hausdorff(pb, rb), polys(pb, rb, polys_mode)
    else:
        d_max = joint_bbox_diagonal(rb.vertices, rb.vertices)
        d_h = d_p = math.inf
    q_h, q_p = quality(d_h, d_max), quality(d_p, d_max)
    return EvalReport(building_id, per_face, m, ov, d_h, d_p, d_max, q_h, q_p, qvm(m, q_h), len(pred), len(ref))


@dataclass
class DatasetSummary:
    n: int
    mean_miou: float
    mean_oviou: float
    mean_q_p: float
    mean_q_vm: float
    median_q_h: float
    quartiles: dict[str, tuple[float, float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["quartiles"] = {k: list(v) for k, v in self.quartiles.items()}
        return d


SUMMARY_METRICS = ("miou", "oviou", "q_h", "q_p", "q_vm")


def aggregate(reports: Sequence[EvalReport]) -> DatasetSummary:
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    cols = {k: np.array([getattr(r, k) for r in reports], dtype=float) for k in SUMMARY_METRICS}
    quart = {k: tuple(float(q) for q in np.percentile(v, [25, 50, 75])) for k, v in cols.items()}
    return DatasetSummary(
        n=len(reports),
        mean_miou=float(np.mean(cols["miou"])),
        mean_oviou=float(np.mean(cols["oviou"])),
        mean_q_p=float(np.mean(cols["q_p"])),
        mean_q_vm=float(np.mean(cols["q_vm"])),
        median_q_h=float(np.median(cols["q_h"])),
        quartiles=quart,
    )


def reports_to_csv(reports: Sequence[EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([getattr(r, c) if isinstance(getattr(r, c), str) else f"{getattr(r, c):.10g}" for c in CSV_COLUMNS])
    return buf.getvalue()
