"""Glyph atlas: determinism, decorrelation, render/match round trip."""

import numpy as np
import pytest

from docrestore.glyphs import CJK_BASE, GlyphAtlas
from docrestore.model import BBox


def test_chars_come_from_cjk_block(small_atlas):
    assert len(small_atlas.chars) == 30
    assert small_atlas.chars[0] == chr(CJK_BASE)
    assert all(ord(c) >= CJK_BASE for c in small_atlas.chars)


def test_two_builds_identical(small_atlas):
    again = GlyphAtlas(size=30)
    for ch in small_atlas.chars:
        np.testing.assert_array_equal(small_atlas.bitmap(ch), again.bitmap(ch))


def test_cross_correlation_bound(small_atlas):
    templates = [small_atlas.template(ch) for ch in small_atlas.chars]
    for i in range(len(templates)):
        for j in range(i + 1, len(templates)):
            assert abs(float(templates[i] @ templates[j])) < small_atlas.max_cross


def test_unknown_char(small_atlas):
    assert "X" not in small_atlas
    with pytest.raises(KeyError):
        small_atlas.bitmap("X")


def test_render_then_match_round_trip(small_atlas):
    cell = small_atlas.cell
    image = np.full((cell * 2, cell * 2), 245, dtype=np.uint8)
    ch = small_atlas.chars[7]
    box = BBox(cell, 0, cell * 2, cell)
    small_atlas.render(image, box, ch)
    ranked = small_atlas.match(image[0:cell, cell : cell * 2])
    assert ranked[0][0] == ch
    assert ranked[0][1] > 0.9


def test_match_every_char_correctly(small_atlas):
    for ch in small_atlas.chars:
        ranked = small_atlas.match(small_atlas.bitmap(ch))
        assert ranked[0][0] == ch


def test_render_darkens_never_lightens(small_atlas):
    image = np.full((64, 64), 120, dtype=np.uint8)
    before = image.copy()
    small_atlas.render(image, BBox(10, 10, 42, 42), small_atlas.chars[0])
    assert (image <= before).all()


def test_render_resizes_to_box(small_atlas):
    # a box smaller than the native cell still receives ink inside it only
    image = np.full((64, 64), 245, dtype=np.uint8)
    small_atlas.render(image, BBox(20, 20, 36, 36), small_atlas.chars[3])
    touched = np.argwhere(image != 245)
    assert touched.size > 0
    assert touched[:, 0].min() >= 20 and touched[:, 0].max() < 36
    assert touched[:, 1].min() >= 20 and touched[:, 1].max() < 36


def test_constant_crop_scores_zero(small_atlas):
    flat = np.full((32, 32), 200, dtype=np.uint8)
    ranked = small_atlas.match(flat)
    assert all(score == 0.0 for _, score in ranked)


def test_match_scores_sorted_descending(small_atlas):
    ranked = small_atlas.match(small_atlas.bitmap(small_atlas.chars[1]))
    scores = [s for _, s in ranked]
    assert scores == sorted(scores, reverse=True)
