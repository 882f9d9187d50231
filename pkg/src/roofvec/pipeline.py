"""Detections in, faces out: the per-building composition of all stages."""

from __future__ import annotations

from dataclasses import dataclass

from .faces import A_MIN, FaceReport, RasterGrid, extract_faces
from .geom import Segment
from .ingest import BuildingInput, FaceSet
from .polygonize import Diagnostics, PolygonizeParams, RoofGraph, polygonize


@dataclass
class BuildingResult:
    building_id: str
    image_size: tuple[int, int]
    segments: list[Segment]
    graph: RoofGraph
    diagnostics: Diagnostics
    faces: FaceSet
    face_report: FaceReport
    grid: RasterGrid

    def diagnostics_dict(self) -> dict:
        return {
            "building_id": self.building_id,
            "image_size": list(self.image_size),
            "polygonize": self.diagnostics.to_dict(),
            "faces": self.face_report.to_dict(),
            "graph": {
                "vertices": self.graph.vertices.tolist(),
                "edges": [list(e) for e in self.graph.edges],
            },
            "input_segments": [[s.id, s.p0.x, s.p0.y, s.p1.x, s.p1.y] for s in self.segments],
        }


def run_building(
    segments: list[Segment],
    image_size: tuple[int, int],
    params: PolygonizeParams | None = None,
    a_min: float = A_MIN,
    building_id: str = "",
) -> BuildingResult:
    graph, diag = polygonize(segments, image_size, params)
    faces, rep, grid = extract_faces(graph, image_size, a_min)
    return BuildingResult(building_id, tuple(image_size), list(segments), graph, diag, faces, rep, grid)


def run_input(building: BuildingInput, params: PolygonizeParams | None = None, a_min: float = A_MIN) -> BuildingResult:
    return run_building(building.segments, building.image_size, params, a_min, building.building_id)
