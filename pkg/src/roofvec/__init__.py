"""Roof-edge detections to closed roof-face polygons, plus raster/vector evaluation."""

__version__ = "0.1.0"

from .geom import BoundingBox, OrientedBox, Point, Segment, obb_to_segment, segment_to_obb
from .ingest import BuildingInput, FaceSet
from .metrics import EvalReport, aggregate, evaluate
from .pipeline import BuildingResult, run_building
from .polygonize import PolygonizeParams, RoofGraph, polygonize

__all__ = [
    "BoundingBox",
    "BuildingInput",
    "BuildingResult",
    "EvalReport",
    "FaceSet",
    "OrientedBox",
    "Point",
    "PolygonizeParams",
    "RoofGraph",
    "Segment",
    "aggregate",
    "evaluate",
    "obb_to_segment",
    "polygonize",
    "run_building",
    "segment_to_obb",
]
