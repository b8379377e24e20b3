"""Shared fixtures. The glyph atlas is expensive enough (template
decorrelation loop) that tests share one per size."""

import pytest

from docrestore.glyphs import GlyphAtlas


@pytest.fixture(scope="session")
def atlas():
    """Full-size atlas matching the pipeline defaults."""
    return GlyphAtlas()


@pytest.fixture(scope="session")
def small_atlas():
    """30 glyphs: enough for toy pages, much faster to build."""
    return GlyphAtlas(size=30)
