"""Box geometry: constructor invariants and the IoU property suite."""

import numpy as np
import pytest

from maskwatch import BBox, iou, validate_bbox
from oracles import iou_ref, random_box


class TestBBox:
    def test_corners_round_trip(self):
        # Dyadic values make every corner computation exact in floats.
        box = BBox(0.5, 0.5, 0.25, 0.5, cls=1, conf=0.75)
        assert box.corners() == (0.375, 0.25, 0.625, 0.75)
        again = BBox.from_corners(*box.corners(), cls=1, conf=0.75)
        assert again == box

    def test_area(self):
        assert BBox(0.5, 0.5, 0.2, 0.3).area == pytest.approx(0.06)

    def test_rejects_out_of_image(self):
        with pytest.raises(ValueError):
            BBox(0.9, 0.5, 0.4, 0.2)

    def test_rejects_bad_conf(self):
        with pytest.raises(ValueError):
            BBox(0.5, 0.5, 0.2, 0.2, conf=1.5)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            BBox(float("nan"), 0.5, 0.2, 0.2)

    def test_allows_edge_rounding_slack(self):
        BBox(0.5, 0.5, 1.0 + 5e-7, 1.0)  # within EDGE_EPS

    def test_validate_rejects_zero_area(self):
        box = BBox(0.5, 0.5, 0.0, 0.2)
        with pytest.raises(ValueError):
            validate_bbox(box)

    def test_shifted(self):
        box = BBox(0.3, 0.3, 0.2, 0.2, cls=1, conf=0.5)
        moved = box.shifted(0.1, -0.1)
        assert (moved.cx, moved.cy) == (pytest.approx(0.4), pytest.approx(0.2))
        assert (moved.w, moved.h, moved.cls, moved.conf) == (0.2, 0.2, 1, 0.5)


class TestIou:
    def test_identity_is_one(self):
        box = BBox(0.5, 0.5, 0.2, 0.4)
        assert iou(box, box) == 1.0

    def test_disjoint_is_zero(self):
        a = BBox(0.2, 0.5, 0.2, 0.2)
        b = BBox(0.8, 0.5, 0.2, 0.2)
        assert iou(a, b) == 0.0

    def test_half_width_offset_is_one_third(self):
        # Two 0.2-square boxes whose centers sit 0.1 apart in x overlap in a
        # 0.1 x 0.2 strip: intersection 0.02, union 2*0.04 - 0.02 = 0.06.
        a = BBox(0.4, 0.5, 0.2, 0.2)
        b = BBox(0.5, 0.5, 0.2, 0.2)
        assert iou(a, b) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_zero_area_returns_zero_with_warning(self, caplog):
        a = BBox(0.5, 0.5, 0.0, 0.2)
        b = BBox(0.5, 0.5, 0.2, 0.2)
        with caplog.at_level("WARNING"):
            assert iou(a, b) == 0.0
        assert any("zero-area" in rec.message for rec in caplog.records)

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            a = random_box(rng, cls=0)
            b = random_box(rng, cls=0)
            ab = iou(a, b)
            assert ab == iou(b, a)
            assert 0.0 <= ab <= 1.0

    def test_translation_invariance(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            a = random_box(rng, cls=0)
            b = random_box(rng, cls=0)
            base = iou(a, b)
            lo_x = -min(a.corners()[0], b.corners()[0])
            hi_x = 1.0 - max(a.corners()[2], b.corners()[2])
            lo_y = -min(a.corners()[1], b.corners()[1])
            hi_y = 1.0 - max(a.corners()[3], b.corners()[3])
            dx = rng.uniform(lo_x, hi_x)
            dy = rng.uniform(lo_y, hi_y)
            moved = iou(a.shifted(dx, dy), b.shifted(dx, dy))
            assert moved == pytest.approx(base, abs=1e-12)

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(9)
        for _ in range(500):
            a = random_box(rng, cls=0)
            b = random_box(rng, cls=0)
            assert iou(a, b) == pytest.approx(iou_ref(a, b), abs=1e-12)
