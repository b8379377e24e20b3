"""Degradation synthesis: damaged/ground-truth training pairs.

Three degradation families are composed per recipe: character removal
(bands of a glyph replaced by locally estimated background), paper
damage (solid black or white blobs), and ink erosion (stroke thinning,
blur, speckle). Every operator is a pure function of its inputs and the
recipe seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.ndimage import gaussian_filter, grey_dilation

from .glyphs import GlyphAtlas
from .model import (
    BBox,
    CharObservation,
    DamageBox,
    DamageGrade,
    LineGroup,
    PageDocument,
    ReadingRef,
)
from .raster import pixel_bounds

KINDS = ("char_missing", "paper_damage", "ink_erosion")
INK_LEVEL = 128  # below this a pixel counts as glyph ink


@dataclass(frozen=True)
class DegradationRecipe:
    """Which degradations to apply and how hard, all keyed to one seed."""

    kinds: tuple[str, ...] = KINDS
    char_fraction: float = 0.3
    removal_band: tuple[float, float] = (0.4, 1.0)
    coverage: tuple[float, float] = (0.005, 0.02)
    blob_count: tuple[int, int] = (2, 5)
    fill: str = "black"
    erosion_kernel: tuple[int, int] = (0, 0)
    blur_sigma: float = 0.0
    noise_density: float = 0.0
    detector_miss_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for kind in self.kinds:
            if kind not in KINDS:
                raise ValueError(f"unknown degradation kind {kind!r}")
        for name in ("char_fraction", "noise_density", "detector_miss_rate"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0,1], got {value}")
        for name in ("removal_band", "coverage"):
            lo, hi = getattr(self, name)
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"{name} must be a non-empty range in [0,1]")
        if self.blob_count[0] > self.blob_count[1] or self.blob_count[0] < 0:
            raise ValueError("blob_count must be a non-empty non-negative range")
        if self.erosion_kernel[0] > self.erosion_kernel[1] or self.erosion_kernel[0] < 0:
            raise ValueError("erosion_kernel must be a non-empty non-negative range")
        if self.fill not in ("black", "white"):
            raise ValueError(f"fill must be black or white, got {self.fill!r}")
        if self.blur_sigma < 0:
            raise ValueError("blur_sigma must be >= 0")


def grade_from_fraction(fraction: float) -> DamageGrade:
    """Removed-content fraction to grade; more removal never grades lighter."""
    if fraction >= 0.8:
        return DamageGrade.SEVERE
    if fraction >= 0.4:
        return DamageGrade.MEDIUM
    return DamageGrade.LIGHT


def _ring_median(image: np.ndarray, box: BBox, margin: int = 4) -> int:
    """Median intensity of the ring just outside the box (background)."""
    h, w = image.shape
    outer = BBox(
        box.x_min - margin, box.y_min - margin, box.x_max + margin, box.y_max + margin
    )
    ox0, oy0, ox1, oy1 = pixel_bounds(outer, w, h)
    ix0, iy0, ix1, iy1 = pixel_bounds(box, w, h)
    region = image[oy0:oy1, ox0:ox1]
    keep = np.ones(region.shape, dtype=bool)
    keep[iy0 - oy0 : iy1 - oy0, ix0 - ox0 : ix1 - ox0] = False
    ring = region[keep]
    return int(np.median(ring)) if ring.size else 245


def removed_ink_fraction(clean: np.ndarray, damaged: np.ndarray, box: BBox) -> float:
    """Fraction of the clean crop's ink pixels no longer ink afterwards."""
    h, w = clean.shape
    x0, y0, x1, y1 = pixel_bounds(box, w, h)
    before = clean[y0:y1, x0:x1] < INK_LEVEL
    count = int(before.sum())
    if count == 0:
        return 0.0
    after = damaged[y0:y1, x0:x1] < INK_LEVEL
    return float(np.logical_and(before, ~after).sum()) / count


def synth_char_missing(
    image: np.ndarray,
    char_boxes: Sequence[BBox],
    recipe: DegradationRecipe,
) -> tuple[np.ndarray, list[tuple[BBox, DamageGrade]]]:
    """Remove horizontal bands of selected glyphs, filling with the
    surrounding background estimate; grades reflect measured ink loss."""
    out = image.copy()
    count = int(round(recipe.char_fraction * len(char_boxes)))
    if count == 0 or not char_boxes:
        return out, []
    rng = np.random.default_rng(np.random.SeedSequence([recipe.seed, 1]))
    chosen = sorted(rng.choice(len(char_boxes), size=count, replace=False).tolist())
    h, w = image.shape
    affected: list[tuple[BBox, DamageGrade]] = []
    for i in chosen:
        box = char_boxes[i]
        frac = float(rng.uniform(*recipe.removal_band))
        start = float(rng.uniform(0.0, 1.0 - frac)) if frac < 1.0 else 0.0
        band = BBox(
            box.x_min,
            box.y_min + start * box.height,
            box.x_max,
            box.y_min + (start + frac) * box.height,
        )
        bx0, by0, bx1, by1 = pixel_bounds(band, w, h)
        fill = _ring_median(image, box)
        out[by0:by1, bx0:bx1] = fill
        affected.append((box, grade_from_fraction(removed_ink_fraction(image, out, box))))
    return out, affected


def synth_paper_damage(
    image: np.ndarray, recipe: DegradationRecipe
) -> tuple[np.ndarray, np.ndarray]:
    """Stamp solid blobs until coverage lands inside the recipe range.

    Blobs are unions of seeded ellipses; a candidate that would push
    coverage past the range ceiling is shrunk before stamping, so the
    measured altered fraction always lands in range.
    """
    out = image.copy()
    mask = np.zeros(image.shape, dtype=np.uint8)
    lo, hi = recipe.coverage
    if hi <= 0.0:
        return out, mask
    rng = np.random.default_rng(np.random.SeedSequence([recipe.seed, 2]))
    h, w = image.shape
    total = float(h * w)
    target = float(rng.uniform(lo, hi))
    value = 0 if recipe.fill == "black" else 255
    if target >= 0.999:
        out[:, :] = value
        mask[:, :] = 1
        return out, mask
    blobs = int(rng.integers(recipe.blob_count[0], recipe.blob_count[1] + 1))
    per_blob = max(target / max(blobs, 1), 1.0 / total)
    failures = 0
    while float(mask.sum()) / total < target and failures < 1000:
        remaining = target - float(mask.sum()) / total
        area = min(per_blob, remaining + 2.0 / total) * total
        cx = float(rng.uniform(0, w))
        cy = float(rng.uniform(0, h))
        aspect = float(rng.uniform(0.5, 2.0))
        stamped = False
        for _ in range(40):  # shrink until the stamp fits under the ceiling
            rx = max(1.0, float(np.sqrt(area * aspect / np.pi)))
            ry = max(1.0, area / (np.pi * rx))
            x0, x1 = max(0, int(cx - rx)), min(w, int(np.ceil(cx + rx)) + 1)
            y0, y1 = max(0, int(cy - ry)), min(h, int(np.ceil(cy + ry)) + 1)
            if x1 <= x0 or y1 <= y0:
                break
            yy, xx = np.ogrid[y0:y1, x0:x1]
            inside = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
            candidate = mask[y0:y1, x0:x1] | inside.astype(np.uint8)
            grown = float(mask.sum() - mask[y0:y1, x0:x1].sum() + candidate.sum())
            if grown / total <= hi:
                mask[y0:y1, x0:x1] = candidate
                stamped = True
                break
            area *= 0.5
            if area < 1.0:
                break
        if not stamped:
            if float(mask.sum()) / total >= lo:
                break  # in range already; the ceiling blocks further growth
            failures += 1
    out[mask == 1] = value
    return out, mask


def synth_ink_erosion(image: np.ndarray, recipe: DegradationRecipe) -> np.ndarray:
    """Thin dark strokes, blur, and flip speckle pixels per recipe.

    All-zero strengths return the input bit-exactly.
    """
    rng = np.random.default_rng(np.random.SeedSequence([recipe.seed, 3]))
    k = int(rng.integers(recipe.erosion_kernel[0], recipe.erosion_kernel[1] + 1))
    out = image.copy()
    if k > 1:
        # Grey dilation takes local maxima, thinning dark ink strokes.
        out = grey_dilation(out, size=(k, k))
    if recipe.blur_sigma > 0:
        out = np.clip(
            np.rint(gaussian_filter(out.astype(np.float64), recipe.blur_sigma)),
            0,
            255,
        ).astype(np.uint8)
    if recipe.noise_density > 0:
        flips = rng.random(out.shape) < recipe.noise_density
        out[flips] = 255 - out[flips]
    return out


def generate_toy_page(
    columns: int,
    chars_per_column: int,
    atlas: GlyphAtlas,
    seed: int = 0,
    margin: int = 16,
    gap: int = 8,
) -> tuple[np.ndarray, PageDocument]:
    """Render a vertical right-to-left page of atlas glyphs.

    Boxes are emitted rightmost column first, top to bottom, and the
    document's reading order records exactly that emission order, so the
    page is its own sequencing oracle.
    """
    if columns < 1 or chars_per_column < 1:
        raise ValueError("columns and chars_per_column must be >= 1")
    cell = atlas.cell
    width = 2 * margin + columns * cell + (columns - 1) * gap
    height = 2 * margin + chars_per_column * cell + (chars_per_column - 1) * gap
    image = np.full((height, width), 245, dtype=np.uint8)
    rng = np.random.default_rng(np.random.SeedSequence([seed]))

    chars: list[CharObservation] = []
    order: list[ReadingRef] = []
    lines: list[LineGroup] = []
    for col in range(columns):
        x0 = width - margin - cell - col * (cell + gap)
        members: list[int] = []
        for row in range(chars_per_column):
            y0 = margin + row * (cell + gap)
            label = atlas.chars[int(rng.integers(len(atlas.chars)))]
            box = BBox(float(x0), float(y0), float(x0 + cell), float(y0 + cell))
            atlas.render(image, box, label)
            idx = len(chars)
            chars.append(
                CharObservation(
                    box=box,
                    candidates=((label, 1.0),),
                    source="human",
                    gt_label=label,
                )
            )
            order.append(ReadingRef("legible", idx))
            members.append(idx)
        lines.append(LineGroup(chars=tuple(members), damage_boxes=()))

    doc = PageDocument(
        width=width,
        height=height,
        chars=tuple(chars),
        damage_boxes=(),
        lines=tuple(lines),
        reading_order=tuple(order),
    )
    return image, doc


def occluded_fraction(clean: np.ndarray, damaged: np.ndarray, box: BBox) -> float:
    """Fraction of box pixels whose intensity changed materially."""
    h, w = clean.shape
    x0, y0, x1, y1 = pixel_bounds(box, w, h)
    a = clean[y0:y1, x0:x1].astype(np.int16)
    b = damaged[y0:y1, x0:x1].astype(np.int16)
    if a.size == 0:
        return 0.0
    return float((np.abs(a - b) > 60).sum()) / a.size


def damage_score(clean: np.ndarray, damaged: np.ndarray, box: BBox) -> float:
    """Unreadability estimate in [0,1] combining ink loss and occlusion.

    Ink loss covers background-colored fills; the occlusion term covers
    solid fills that bury the glyph without ever brightening its ink.
    """
    ink = removed_ink_fraction(clean, damaged, box)
    occ = occluded_fraction(clean, damaged, box)
    return max(ink, min(1.0, occ / 0.8))


def make_pair(
    clean: np.ndarray,
    doc: PageDocument,
    recipe: DegradationRecipe,
) -> tuple[np.ndarray, np.ndarray, PageDocument]:
    """Compose the recipe's degradations over a clean page.

    Returns (damaged image, untouched ground truth, annotation for the
    damaged page). Characters degraded beyond light readability move
    from the char list to graded damage boxes with their ground-truth
    label attached; a seeded fraction of them stay put instead,
    simulating detector misses for the low-confidence fusion path.
    """
    gt = clean.copy()
    damaged = clean.copy()
    boxes = [obs.box for obs in doc.chars]

    if "char_missing" in recipe.kinds:
        damaged, _ = synth_char_missing(damaged, boxes, recipe)
    if "paper_damage" in recipe.kinds:
        damaged, _ = synth_paper_damage(damaged, recipe)
    if "ink_erosion" in recipe.kinds:
        damaged = synth_ink_erosion(damaged, recipe)

    scores = [damage_score(clean, damaged, box) for box in boxes]
    affected = [i for i, s in enumerate(scores) if s >= 0.25]
    rng = np.random.default_rng(np.random.SeedSequence([recipe.seed, 4]))
    missed = {
        i for i in affected if float(rng.random()) < recipe.detector_miss_rate
    }
    moved = [i for i in affected if i not in missed]

    new_chars: list[CharObservation] = []
    char_remap: dict[int, int] = {}
    for i, obs in enumerate(doc.chars):
        if i in moved:
            continue
        char_remap[i] = len(new_chars)
        if i in missed:
            # Damaged but undetected; keep the grade so evaluation knows.
            obs = replace(obs, grade=grade_from_fraction(scores[i]))
        new_chars.append(obs)

    new_damage = list(doc.damage_boxes)
    damage_remap: dict[int, int] = {}
    for i in moved:
        damage_remap[i] = len(new_damage)
        new_damage.append(
            DamageBox(
                box=doc.chars[i].box,
                grade=grade_from_fraction(scores[i]),
                gt_label=doc.chars[i].gt_label,
            )
        )

    new_order: list[ReadingRef] = []
    for ref in doc.reading_order:
        if ref.kind == "legible" and ref.index in damage_remap:
            new_order.append(ReadingRef("damaged", damage_remap[ref.index]))
        elif ref.kind == "legible":
            new_order.append(ReadingRef("legible", char_remap[ref.index]))
        else:
            new_order.append(ref)

    new_lines: list[LineGroup] = []
    for line in doc.lines:
        kept = tuple(char_remap[i] for i in line.chars if i in char_remap)
        extra = tuple(damage_remap[i] for i in line.chars if i in damage_remap)
        new_lines.append(
            LineGroup(chars=kept, damage_boxes=tuple(line.damage_boxes) + extra)
        )

    out_doc = replace(
        doc,
        chars=tuple(new_chars),
        damage_boxes=tuple(new_damage),
        lines=tuple(new_lines),
        reading_order=tuple(new_order),
    )
    return damaged, gt, out_doc
