import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import unique_edge_count
from roofvec.geom import Segment, signed_area
from roofvec.synth import (
    FACE_COUNT,
    KINDS,
    CorruptionSpec,
    RoofTemplate,
    corrupt,
    generate,
    random_template,
    synthetic_suite,
)

EDGE_COUNT = {"flat-rect": 4, "gable": 7, "hip": 9, "L-shape": 8, "cross-gable": 15}


def segments_cross(a, b):
    """Proper crossing of two segments (shared endpoints do not count)."""
    p, q = a.as_array(), b.as_array()
    if any(np.allclose(x, y) for x in p for y in q):
        return False

    def orient(o, u, v):
        return np.sign((u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]))

    return orient(p[0], p[1], q[0]) * orient(p[0], p[1], q[1]) < 0 and orient(q[0], q[1], p[0]) * orient(q[0], q[1], p[1]) < 0


class TestGenerate:
    def test_gable_100x60(self):
        fs, edges = generate(RoofTemplate("gable", ((0, 0, 100, 60),)))
        assert len(fs) == 2 and len(edges) == 7 == unique_edge_count(fs.rings())

    def test_flat(self):
        fs, edges = generate(RoofTemplate("flat-rect", ((5, 5, 40, 40),)))
        assert len(fs) == 1 and len(edges) == 4

    def test_hip_120x80(self):
        fs, edges = generate(RoofTemplate("hip", ((0, 0, 120, 80),)))
        assert len(fs) == 4 and len(edges) == 9
        lengths = sorted(round(e.length, 6) for e in edges)
        # 4 hips of 40*sqrt(2), ridge 40, eaves 80, 80, 120, 120
        assert lengths == sorted([round(40 * math.sqrt(2), 6)] * 4 + [40, 80, 80, 120, 120])

    def test_tall_hip_transposed(self):
        fs, edges = generate(RoofTemplate("hip", ((0, 0, 80, 120),)))
        assert len(fs) == 4 and len(edges) == 9

    @pytest.mark.parametrize("kind", ["gable", "hip"])
    def test_too_small(self, kind):
        with pytest.raises(ValueError, match="too small"):
            RoofTemplate(kind, ((0, 0, 8, 8),))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            RoofTemplate("mansard", ((0, 0, 100, 100),))

    def test_square_hip_rejected(self):
        with pytest.raises(ValueError, match="ridge"):
            generate(RoofTemplate("hip", ((0, 0, 100, 100),)))

    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from(KINDS), st.integers(0, 10_000), st.booleans())
    def test_watertight_planar_ccw(self, kind, seed, rotate):
        fs, edges = generate(random_template(kind, seed, rotate=rotate))
        assert len(fs) == FACE_COUNT[kind] and len(edges) == EDGE_COUNT[kind]
        assert len(edges) == unique_edge_count(fs.rings())
        for ring in fs.rings():
            assert signed_area(ring) > 0
        # every edge has one or two faces; the one-face edges form the outline
        uses = Counter(e for f in fs.face_edge_ids for e in f)
        assert set(uses.values()) <= {1, 2}
        outline = [e for e, n in uses.items() if n == 1]
        area = sum(signed_area(r) for r in fs.rings())
        assert area > 0 and len(outline) >= 4
        for i, a in enumerate(edges):
            for b in edges[i + 1 :]:
                assert not segments_cross(a, b)
        assert fs.vertices.min() >= 0 and fs.vertices.max() <= 1024


class TestCorrupt:
    EDGE = Segment.from_coords(0, 0, 0, 100, 0)

    def test_identity(self):
        _, edges = generate(random_template("hip", 1))
        assert corrupt(edges, CorruptionSpec()) == edges

    def test_truncate(self):
        (e,) = corrupt([Segment.from_coords(0, 10, 20, 70, 100)], CorruptionSpec(truncate_px=4))
        assert e.length == pytest.approx(92)
        assert (e.midpoint.x, e.midpoint.y) == pytest.approx((40, 60))
        assert math.atan2(e.p1.y - e.p0.y, e.p1.x - e.p0.x) == pytest.approx(math.atan2(80, 60))

    def test_short_edges_vanish(self):
        assert corrupt([Segment.from_coords(0, 0, 0, 8, 0)], CorruptionSpec(truncate_px=4)) == []

    def test_deterministic(self):
        _, edges = generate(random_template("cross-gable", 2))
        spec = CorruptionSpec(3, 1.5, 0.2, 0.01, seed=42)
        assert corrupt(edges, spec) == corrupt(edges, spec)
        assert corrupt(edges, spec) != corrupt(edges, CorruptionSpec(3, 1.5, 0.2, 0.01, seed=43))

    def test_per_edge_streams(self):
        # an edge's fate does not depend on the others
        _, edges = generate(random_template("cross-gable", 2))
        spec = CorruptionSpec(0, 1.0, 0.3, 0.0, seed=5)
        full = {e.id: e for e in corrupt(edges, spec)}
        alone = {e.id: e for e in corrupt(edges[5:], spec)}
        for k, e in alone.items():
            assert full[k] == e

    def test_invalid(self):
        with pytest.raises(ValueError):
            CorruptionSpec(drop_prob=1.0)
        with pytest.raises(ValueError):
            CorruptionSpec(truncate_px=-1)


def test_suite_ids_and_sizes():
    suite = synthetic_suite(range(3), image_size=512)
    assert len(suite) == 15
    assert suite[0].building_id == f"{KINDS[0]}_0000"
    assert len({c.building_id for c in suite}) == 15
    assert all(c.image_size == (512, 512) for c in suite)


def test_random_template_reproducible():
    assert random_template("L-shape", 9) == random_template("L-shape", 9)
    assert random_template("L-shape", 9) != random_template("L-shape", 10)
