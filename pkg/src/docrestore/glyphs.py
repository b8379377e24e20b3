"""Procedural glyph atlas for synthetic pages.

Each atlas character (drawn from the CJK unified block so texts look
like the target domain) maps to a deterministic stroke bitmap. The
bitmaps double as recognition templates: generation keeps pairwise
correlations low so template matching stays discriminative.
"""

from __future__ import annotations

from itertools import count

import numpy as np
from PIL import Image

from .model import BBox
from .raster import pixel_bounds

CJK_BASE = 0x4E00


def _draw_strokes(rng: np.random.Generator, cell: int) -> np.ndarray:
    """Random horizontal/vertical stroke pattern, ink 0 on paper 255."""
    img = np.full((cell, cell), 255, dtype=np.uint8)
    margin = 3
    for _ in range(int(rng.integers(1, 4))):
        t = int(rng.integers(2, 5))
        r = int(rng.integers(margin, cell - margin - t))
        c0 = int(rng.integers(margin, cell // 2))
        c1 = int(rng.integers(cell // 2 + 2, cell - margin + 1))
        img[r : r + t, c0:c1] = 0
    for _ in range(int(rng.integers(1, 4))):
        t = int(rng.integers(2, 5))
        c = int(rng.integers(margin, cell - margin - t))
        r0 = int(rng.integers(margin, cell // 2))
        r1 = int(rng.integers(cell // 2 + 2, cell - margin + 1))
        img[r0:r1, c : c + t] = 0
    return img


def _normalize(bitmap: np.ndarray) -> np.ndarray:
    """Flattened zero-mean unit-norm ink vector for correlation."""
    ink = (255.0 - bitmap.astype(np.float64)).ravel()
    ink -= ink.mean()
    norm = float(np.linalg.norm(ink))
    return ink / norm if norm > 0 else ink


class GlyphAtlas:
    """Deterministic glyph set with rendering and template matching.

    Characters are generated one by one; a candidate bitmap is accepted
    only when its correlation against every earlier glyph stays below
    max_cross, so no two glyphs are confusable.
    """

    def __init__(
        self,
        size: int = 120,
        cell: int = 32,
        seed: int = 7,
        max_cross: float = 0.4,
    ) -> None:
        if size < 1:
            raise ValueError(f"size must be >= 1, got {size}")
        self.cell = cell
        self.seed = seed
        self.max_cross = max_cross
        self.chars: tuple[str, ...] = tuple(chr(CJK_BASE + i) for i in range(size))
        bitmaps: list[np.ndarray] = []
        templates: list[np.ndarray] = []
        for i in range(size):
            for attempt in count():
                rng = np.random.default_rng(
                    np.random.SeedSequence([seed, CJK_BASE + i, attempt])
                )
                bmp = _draw_strokes(rng, cell)
                vec = _normalize(bmp)
                if not templates or max(
                    abs(float(vec @ t)) for t in templates
                ) < max_cross:
                    bitmaps.append(bmp)
                    templates.append(vec)
                    break
        self._bitmaps = {c: b for c, b in zip(self.chars, bitmaps)}
        self._templates = np.stack(templates)

    def __contains__(self, ch: str) -> bool:
        return ch in self._bitmaps

    def bitmap(self, ch: str) -> np.ndarray:
        try:
            return self._bitmaps[ch]
        except KeyError:
            raise KeyError(f"character {ch!r} not in atlas") from None

    def template(self, ch: str) -> np.ndarray:
        """Zero-mean unit-norm matching vector for one character."""
        return self._templates[self.chars.index(ch)]

    def render(self, image: np.ndarray, box: BBox, ch: str) -> None:
        """Stamp a glyph into the box region, darkening only.

        A box matching the native cell size is stamped verbatim; other
        sizes go through bilinear resampling.
        """
        bmp = self.bitmap(ch)
        x0, y0, x1, y1 = pixel_bounds(box, image.shape[1], image.shape[0])
        h, w = y1 - y0, x1 - x0
        if h <= 0 or w <= 0:
            return
        if (h, w) != bmp.shape:
            bmp = np.asarray(
                Image.fromarray(bmp).resize((w, h), Image.BILINEAR), dtype=np.uint8
            )
        region = image[y0:y1, x0:x1]
        np.minimum(region, bmp, out=region)

    def match(self, crop: np.ndarray) -> list[tuple[str, float]]:
        """Correlate a crop against every template, best first.

        A featureless crop (constant intensity) correlates with nothing
        and scores 0.0 everywhere. Ties fall to character order so the
        ranking is total.
        """
        if crop.size == 0:
            scores = np.zeros(len(self.chars))
        else:
            arr = np.asarray(
                Image.fromarray(crop).resize((self.cell, self.cell), Image.BILINEAR),
                dtype=np.float64,
            )
            ink = (255.0 - arr).ravel()
            ink -= ink.mean()
            norm = float(np.linalg.norm(ink))
            if norm < 1e-9:
                scores = np.zeros(len(self.chars))
            else:
                scores = self._templates @ (ink / norm)
        order = sorted(range(len(self.chars)), key=lambda i: (-scores[i], i))
        return [(self.chars[i], float(scores[i])) for i in order]
