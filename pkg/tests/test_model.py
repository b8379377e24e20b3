"""Value-type invariants: geometry predicates, candidate normalization,
document validation."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from docrestore.model import (
    BBox,
    CharObservation,
    DamageBox,
    DamageGrade,
    LineGroup,
    PageDocument,
    ReadingRef,
    validate_page,
)


def box(*coords):
    return BBox(*map(float, coords))


class TestBBox:
    def test_geometry_properties(self):
        b = box(2, 3, 10, 7)
        assert b.width == 8
        assert b.height == 4
        assert b.area == 32
        assert b.center == (6.0, 5.0)

    def test_contains_is_edge_inclusive(self):
        outer = box(0, 0, 10, 10)
        assert outer.contains(box(0, 0, 10, 10))
        assert outer.contains(box(2, 2, 8, 8))
        assert not outer.contains(box(2, 2, 10.001, 8))

    def test_intersects_is_open(self):
        # Sharing only an edge is not an intersection: a window that merely
        # touches a box must not defer it.
        a = box(0, 0, 10, 10)
        assert not a.intersects(box(10, 0, 20, 10))
        assert not a.intersects(box(0, 10, 10, 20))
        assert a.intersects(box(9.999, 0, 20, 10))

    def test_clipped(self):
        b = box(-5, -5, 120, 40).clipped(100, 30)
        assert b.as_list() == [0, 0, 100, 30]

    def test_violations(self):
        assert box(0, 0, 5, 5).violations() == []
        msgs = box(5, 5, 5, 2).violations("b")
        assert any("x_min >= x_max" in m for m in msgs)
        assert any("y_min >= y_max" in m for m in msgs)
        assert any("negative" in m for m in box(-1, 0, 5, 5).violations())

    @given(
        st.tuples(*[st.floats(-50, 50) for _ in range(4)]),
        st.tuples(*[st.floats(-50, 50) for _ in range(4)]),
    )
    def test_intersects_is_symmetric(self, p, q):
        a = BBox(p[0], p[1], p[0] + abs(p[2]) + 0.1, p[1] + abs(p[3]) + 0.1)
        b = BBox(q[0], q[1], q[0] + abs(q[2]) + 0.1, q[1] + abs(q[3]) + 0.1)
        assert a.intersects(b) == b.intersects(a)


class TestCharObservation:
    def test_candidates_sorted_and_deduplicated(self):
        obs = CharObservation(
            box=box(0, 0, 1, 1),
            candidates=(("a", 0.2), ("b", 0.5), ("a", 0.4), ("c", 0.5)),
        )
        # stable sort keeps b before c at equal probability; the weaker
        # duplicate of "a" is dropped
        assert obs.candidates == (("b", 0.5), ("c", 0.5), ("a", 0.4))
        assert obs.confidence == 0.5
        assert obs.top_label == "b"

    def test_empty_candidates(self):
        obs = CharObservation(box=box(0, 0, 1, 1))
        assert obs.confidence == 0.0
        assert obs.top_label is None


def tiny_page(**overrides):
    base = dict(
        width=100,
        height=100,
        chars=(CharObservation(box=box(10, 10, 20, 20), candidates=(("a", 0.9),)),),
        damage_boxes=(DamageBox(box=box(30, 30, 40, 40), grade=DamageGrade.SEVERE),),
        reading_order=(ReadingRef("legible", 0), ReadingRef("damaged", 0)),
    )
    base.update(overrides)
    return PageDocument(**base)


class TestPageDocument:
    def test_resolve_and_transcript(self):
        doc = tiny_page(
            chars=(
                CharObservation(box=box(10, 10, 20, 20), gt_label="x"),
            ),
            damage_boxes=(DamageBox(box=box(30, 30, 40, 40), gt_label="y"),),
        )
        assert doc.resolve_box(ReadingRef("damaged", 0)) == box(30, 30, 40, 40)
        assert doc.gt_transcript() == "xy"

    def test_transcript_skips_unlabeled(self):
        doc = tiny_page()  # char and damage box both carry no gt_label
        assert doc.gt_transcript() == ""

    def test_resolve_unknown_kind(self):
        with pytest.raises(ValueError):
            tiny_page().resolve_box(ReadingRef("mystery", 0))

    def test_valid_page_has_no_violations(self):
        assert validate_page(tiny_page()) == []

    def test_out_of_bounds_box(self):
        doc = tiny_page(
            chars=(CharObservation(box=box(90, 90, 110, 95)),),
        )
        assert any("out-of-bounds" in v for v in validate_page(doc))

    def test_degenerate_damage_box(self):
        doc = tiny_page(damage_boxes=(DamageBox(box=box(30, 30, 30, 40)),))
        assert any("degenerate" in v for v in validate_page(doc))

    def test_unknown_source(self):
        doc = tiny_page(
            chars=(CharObservation(box=box(1, 1, 2, 2), source="guess"),),
        )
        assert any("unknown source" in v for v in validate_page(doc))

    def test_duplicate_reading_reference(self):
        doc = tiny_page(
            reading_order=(
                ReadingRef("legible", 0),
                ReadingRef("legible", 0),
            ),
        )
        assert any("duplicate-reference" in v for v in validate_page(doc))

    def test_reading_order_index_out_of_range(self):
        doc = tiny_page(reading_order=(ReadingRef("damaged", 5),))
        assert any("out of range" in v for v in validate_page(doc))

    def test_line_index_out_of_range(self):
        doc = tiny_page(lines=(LineGroup(chars=(7,)),))
        assert any("lines[0]" in v for v in validate_page(doc))

    def test_candidate_probability_range(self):
        doc = tiny_page(
            chars=(
                CharObservation(box=box(1, 1, 2, 2), candidates=(("a", 1.5),)),
            ),
        )
        assert any("outside [0,1]" in v for v in validate_page(doc))
