"""Patch scheduling and restoration: window planning, corner selection,
content/mask rendering, locality of the paste step."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docrestore.model import BBox
from docrestore.patching import (
    ParParams,
    PatchPlan,
    RestoreStepError,
    compute_extent,
    plan_patches,
    render_content_mask,
    restore_page,
    select_start_corner,
)


def bb(*coords):
    return BBox(*map(float, coords))


class OutlineGlyphs:
    """Minimal glyph source: fills the box with a solid dark block.

    Raises KeyError for the sentinel label "?" to exercise the outline
    fallback path.
    """

    def render(self, image, box, ch):
        if ch == "?":
            raise KeyError(ch)
        x0, y0 = int(round(box.x_min)), int(round(box.y_min))
        x1, y1 = int(round(box.x_max)), int(round(box.y_max))
        image[y0:y1, x0:x1] = 30


class StampInpaint:
    """Writes a constant everywhere; paste locality must contain it."""

    def __init__(self, value=0, fail_at_call=None):
        self.value = value
        self.calls = 0
        self.fail_at_call = fail_at_call

    def restore(self, patch, content, mask):
        self.calls += 1
        if self.fail_at_call is not None and self.calls == self.fail_at_call:
            raise RuntimeError("backend exploded")
        return np.full_like(patch, self.value)


class TestExtent:
    def test_examples(self):
        assert compute_extent([bb(0, 0, 1, 1), bb(5, 5, 6, 6)]) == bb(0, 0, 6, 6)
        assert compute_extent([bb(2, 3, 4, 5)]) == bb(2, 3, 4, 5)
        assert compute_extent([bb(0, 0, 10, 10), bb(2, 2, 4, 4)]) == bb(0, 0, 10, 10)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_extent([])


class TestStartCorner:
    def test_thinnest_corner_wins(self):
        # all damage clustered bottom-right; the TL patch holds none
        boxes = [bb(800, 800, 850, 850), bb(700, 750, 760, 800)]
        extent = compute_extent(boxes)
        assert select_start_corner(extent, boxes, 448, 896, 896) == "TL"

    def test_tie_break_order(self):
        # a single small box: every corner patch of its own extent
        # contains it, so the count ties at 1 and TL wins
        boxes = [bb(100, 100, 140, 140)]
        extent = compute_extent(boxes)
        assert select_start_corner(extent, boxes, 448, 896, 896) == "TL"

    def test_prefers_corner_excluding_the_boxes(self):
        # extent (0,0,850,850): the TL patch holds 2 boxes, BR holds 1,
        # TR and BL hold none; the TL,TR,BL,BR tie-break picks TR
        boxes = [bb(0, 0, 50, 50), bb(60, 60, 110, 110), bb(800, 800, 850, 850)]
        extent = compute_extent(boxes)
        got = select_start_corner(extent, boxes, 448, 896, 896)
        assert got == "TR"


class TestPlanPatches:
    def test_no_boxes_empty_plan(self):
        plan = plan_patches(896, 896, [])
        assert plan.steps == ()
        assert plan.start_corner is None

    def test_single_small_box_first_window(self):
        plan = plan_patches(896, 896, [bb(10, 10, 60, 60)])
        assert len(plan.steps) == 1
        assert plan.steps[0].window == bb(0, 0, 448, 448)
        assert plan.steps[0].contained == (0,)

    def test_opposite_corners_two_steps(self):
        boxes = [bb(10, 10, 60, 60), bb(830, 830, 880, 880)]
        plan = plan_patches(896, 896, boxes)
        assert len(plan.steps) >= 2
        assignment = plan.assignment
        assert sorted(assignment) == [0, 1]
        counts = [0, 0]
        for step in plan.steps:
            for i in step.contained:
                counts[i] += 1
        assert counts == [1, 1]

    def test_oversized_box_rejected(self):
        with pytest.raises(ValueError, match="exceeds guaranteed containment"):
            plan_patches(896, 896, [bb(0, 0, 300, 100)], ParParams(448, 224))

    def test_box_exactly_stride_sized_allowed(self):
        plan = plan_patches(896, 896, [bb(0, 0, 224, 224)])
        assert plan.assignment == {0: 0}

    def test_zero_assignment_windows_omitted(self):
        # one box far from the start corner: sweeping windows that catch
        # nothing must not appear as steps
        plan = plan_patches(896, 896, [bb(500, 500, 550, 550)])
        assert all(step.contained for step in plan.steps)

    def test_deferred_ids_intersect_but_not_contained(self):
        # small P so a box can straddle a window edge: box 1 crosses the
        # first window's right edge
        params = ParParams(patch_size=100, stride=50)
        boxes = [bb(10, 10, 50, 50), bb(80, 10, 120, 50)]
        plan = plan_patches(300, 300, boxes, params)
        first = plan.steps[0]
        assert first.contained == (0,)
        assert first.deferred == (1,)
        # the deferred box is restored by a later step regardless
        assert 1 in plan.assignment

    def test_livelock_guard_with_wide_stride(self):
        # S == P and boxes positioned so no grid window fully contains
        # them; the fallback window must still assign every box
        params = ParParams(patch_size=10, stride=10)
        boxes = [bb(0, 5, 2, 15), bb(5, 0, 15, 2)]
        plan = plan_patches(15, 15, boxes, params)
        assert sorted(plan.assignment) == [0, 1]

    def test_plan_is_deterministic(self):
        boxes = [bb(i * 37 % 700, i * 53 % 700, i * 37 % 700 + 40, i * 53 % 700 + 40) for i in range(12)]
        a = plan_patches(896, 896, boxes)
        b = plan_patches(896, 896, boxes)
        assert a == b

    def test_windows_clipped_to_image(self):
        plan = plan_patches(500, 300, [bb(400, 200, 450, 260)])
        for step in plan.steps:
            w = step.window
            assert 0 <= w.x_min <= w.x_max <= 500
            assert 0 <= w.y_min <= w.y_max <= 300

    small_layouts = st.lists(
        st.tuples(st.integers(0, 580), st.integers(0, 580), st.integers(4, 100), st.integers(4, 100)),
        min_size=1,
        max_size=12,
    )

    @given(small_layouts)
    @settings(max_examples=60, deadline=None)
    def test_every_box_exactly_once_and_contained(self, raw):
        params = ParParams(patch_size=160, stride=100)
        boxes = [
            bb(x, y, x + min(w, 100), y + min(h, 100)) for x, y, w, h in raw
        ]
        plan = plan_patches(700, 700, boxes, params)
        seen = []
        for step in plan.steps:
            for i in step.contained:
                seen.append(i)
                assert step.window.contains(boxes[i])
            for i in step.deferred:
                assert step.window.intersects(boxes[i])
                assert not step.window.contains(boxes[i])
        assert sorted(seen) == list(range(len(boxes)))


class TestRenderContentMask:
    def test_empty_window(self):
        got = render_content_mask(bb(0, 0, 100, 100), [], OutlineGlyphs())
        assert got.mask.sum() == 0
        assert (got.content == 255).all()

    def test_mask_mean_quarter(self):
        # box covers exactly 25% of the window area
        got = render_content_mask(
            bb(0, 0, 100, 100), [(bb(0, 0, 50, 50), "a")], OutlineGlyphs()
        )
        assert got.mask.mean() == pytest.approx(0.25)
        # content carries ink inside the box
        assert (got.content[:50, :50] == 30).all()
        assert (got.content[50:, :] == 255).all()

    def test_window_local_coordinates(self):
        # window offset from origin: mask indices are window-relative
        got = render_content_mask(
            bb(200, 100, 300, 200), [(bb(250, 150, 260, 160), "a")], OutlineGlyphs()
        )
        assert got.mask.shape == (100, 100)
        assert got.mask[50:60, 50:60].all()
        assert got.mask.sum() == 100

    def test_deferred_regions_masked_out(self):
        got = render_content_mask(
            bb(0, 0, 100, 100),
            [(bb(0, 0, 50, 100), "a")],
            OutlineGlyphs(),
            deferred=[bb(40, 0, 80, 100)],
        )
        # overlap of assigned and deferred is excluded from the mask
        assert got.mask[:, :40].all()
        assert not got.mask[:, 40:].any()
        assert got.ignore[:, 40:80].all()

    def test_missing_label_leaves_blank_with_warning(self):
        got = render_content_mask(
            bb(0, 0, 100, 100), [(bb(10, 10, 30, 30), None)], OutlineGlyphs()
        )
        assert (got.content == 255).all()
        assert got.mask[10:30, 10:30].all()  # still restored, from context
        assert any("no predicted label" in w for w in got.warnings)

    def test_unknown_glyph_renders_outline_with_warning(self):
        got = render_content_mask(
            bb(0, 0, 100, 100), [(bb(10, 10, 30, 30), "?")], OutlineGlyphs()
        )
        assert any("rendered outline" in w for w in got.warnings)
        # border dark, interior blank
        assert got.content[10, 15] == 0
        assert got.content[15, 15] == 255


class TestRestorePage:
    def page(self, size=300):
        return np.full((size, size), 245, dtype=np.uint8)

    def test_only_masked_pixels_change(self):
        image = self.page()
        boxes = [bb(20, 20, 60, 60), bb(150, 200, 190, 240)]
        result = restore_page(
            image,
            boxes,
            ["a", "b"],
            StampInpaint(value=0),
            OutlineGlyphs(),
            ParParams(128, 64),
        )
        # the stamp writes 0 across whole patches, but only box interiors
        # may differ from the input
        changed = np.argwhere(result.image != image)
        allowed = np.zeros_like(image, dtype=bool)
        for b in boxes:
            allowed[int(b.y_min) : int(b.y_max), int(b.x_min) : int(b.x_max)] = True
        assert all(allowed[y, x] for y, x in changed)
        # and the restoration really happened
        assert (result.image[20:60, 20:60] == 0).all()

    def test_input_image_never_mutated(self):
        image = self.page()
        pristine = image.copy()
        restore_page(
            image, [bb(10, 10, 50, 50)], ["a"], StampInpaint(), OutlineGlyphs(), ParParams(128, 64)
        )
        np.testing.assert_array_equal(image, pristine)

    def test_backend_failure_carries_partial(self):
        image = self.page()
        boxes = [bb(10, 10, 50, 50), bb(200, 200, 240, 240)]
        inpaint = StampInpaint(value=0, fail_at_call=2)
        with pytest.raises(RestoreStepError) as err:
            restore_page(
                image, boxes, ["a", "b"], inpaint, OutlineGlyphs(), ParParams(128, 64)
            )
        assert err.value.step_index == 1
        # the first window's work is retained in the partial image
        assert (err.value.partial[10:50, 10:50] == 0).all()
        assert (err.value.partial[200:240, 200:240] == 245).all()

    def test_backend_shape_violation_rejected(self):
        class WrongShape:
            def restore(self, patch, content, mask):
                return np.zeros((3, 3), dtype=np.uint8)

        with pytest.raises(RestoreStepError, match="shape"):
            restore_page(
                self.page(),
                [bb(10, 10, 50, 50)],
                ["a"],
                WrongShape(),
                OutlineGlyphs(),
                ParParams(128, 64),
            )

    def test_mismatched_labels_rejected(self):
        with pytest.raises(ValueError, match="parallel"):
            restore_page(
                self.page(), [bb(0, 0, 10, 10)], [], StampInpaint(), OutlineGlyphs()
            )

    def test_warnings_prefixed_with_step(self):
        result = restore_page(
            self.page(),
            [bb(10, 10, 50, 50)],
            ["?"],
            StampInpaint(),
            OutlineGlyphs(),
            ParParams(128, 64),
        )
        assert result.warnings
        assert result.warnings[0].startswith("step 0:")

    def test_later_windows_see_earlier_restorations(self):
        # an inpainter that echoes its input proves the working image,
        # not the original, feeds each step
        seen = []

        class Echo:
            def restore(self, patch, content, mask):
                seen.append(patch.copy())
                out = patch.copy()
                out[mask == 1] = 7
                return out

        image = self.page()
        # two boxes whose windows overlap under stride 64
        boxes = [bb(10, 10, 50, 50), bb(60, 60, 100, 100)]
        restore_page(image, boxes, ["a", "b"], Echo(), OutlineGlyphs(), ParParams(128, 64))
        if len(seen) > 1:
            # any later patch overlapping the first box must carry the 7s
            assert any((p == 7).any() for p in seen[1:])
