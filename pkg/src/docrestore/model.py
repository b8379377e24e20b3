"""Core value types shared across the restoration pipeline.

All types are immutable value objects and safe to share across threads.
Constructors are permissive so that invalid documents can be represented
and reported; :func:`validate_page` is the single source of truth for
invariant checking and returns violations as data, never raises.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Protocol, Sequence

import numpy as np

CHAR_SOURCES = ("ocr", "damage-detector", "human")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in image pixel coordinates, origin top-left.

    Coordinates are real-valued: fused boxes and clipped windows produce
    fractional geometry, rasterization rounds at the last moment.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def contains(self, other: "BBox") -> bool:
        """True when `other` lies fully inside this box (edges inclusive)."""
        return (
            other.x_min >= self.x_min
            and other.y_min >= self.y_min
            and other.x_max <= self.x_max
            and other.y_max <= self.y_max
        )

    def intersects(self, other: "BBox") -> bool:
        return (
            other.x_min < self.x_max
            and other.x_max > self.x_min
            and other.y_min < self.y_max
            and other.y_max > self.y_min
        )

    def clipped(self, width: float, height: float) -> "BBox":
        return BBox(
            max(0.0, self.x_min),
            max(0.0, self.y_min),
            min(float(width), self.x_max),
            min(float(height), self.y_max),
        )

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    def violations(self, prefix: str = "box") -> list[str]:
        out = []
        if not (self.x_min < self.x_max):
            out.append(f"{prefix}: degenerate-box violation (x_min >= x_max)")
        if not (self.y_min < self.y_max):
            out.append(f"{prefix}: degenerate-box violation (y_min >= y_max)")
        if self.x_min < 0 or self.y_min < 0:
            out.append(f"{prefix}: negative-coordinate violation")
        return out


class DamageGrade(str, Enum):
    """Three-level damage severity taxonomy.

    severe: structural integrity fully lost, illegible even on close
    examination; medium: heavy damage but identifiable with care;
    light: most structure intact, reliably identifiable.
    """

    LIGHT = "light"
    MEDIUM = "medium"
    SEVERE = "severe"


@dataclass(frozen=True)
class CharObservation:
    """A localized character with ranked label candidates.

    `candidates` is normalized on construction: sorted by probability
    descending (stable) and deduplicated by label keeping the best
    occurrence. `confidence` is derived: probability of the top candidate,
    0 when the list is empty (a detector may emit boxes with no labels).

    `grade` and `gt_label` are annotation-layer extras carried through the
    file format; they are absent on raw backend output.
    """

    box: BBox
    candidates: tuple[tuple[str, float], ...] = ()
    source: str = "ocr"
    grade: Optional[DamageGrade] = None
    gt_label: Optional[str] = None

    def __post_init__(self) -> None:
        cands = sorted(self.candidates, key=lambda lp: -float(lp[1]))
        seen: set[str] = set()
        normalized = []
        for label, prob in cands:
            if label in seen:
                continue
            seen.add(label)
            normalized.append((str(label), float(prob)))
        object.__setattr__(self, "candidates", tuple(normalized))

    @property
    def confidence(self) -> float:
        return self.candidates[0][1] if self.candidates else 0.0

    @property
    def top_label(self) -> Optional[str]:
        return self.candidates[0][0] if self.candidates else None


@dataclass(frozen=True)
class DamageBox:
    """A damaged-character region from the damage detector or annotation."""

    box: BBox
    grade: Optional[DamageGrade] = None
    gt_label: Optional[str] = None


@dataclass(frozen=True)
class ReadingRef:
    """A reading-order position: references one char or one damage box."""

    kind: str  # "legible" -> chars index, "damaged" -> damage_boxes index
    index: int


@dataclass(frozen=True)
class LineGroup:
    """Indices of the chars and damage boxes belonging to one text line."""

    chars: tuple[int, ...] = ()
    damage_boxes: tuple[int, ...] = ()


@dataclass(frozen=True)
class PageDocument:
    """A page image plus character boxes, damage boxes, and reading order."""

    width: int
    height: int
    image_path: Optional[str] = None
    chars: tuple[CharObservation, ...] = ()
    damage_boxes: tuple[DamageBox, ...] = ()
    lines: tuple[LineGroup, ...] = ()
    reading_order: tuple[ReadingRef, ...] = ()

    def resolve_box(self, ref: ReadingRef) -> BBox:
        if ref.kind == "legible":
            return self.chars[ref.index].box
        if ref.kind == "damaged":
            return self.damage_boxes[ref.index].box
        raise ValueError(f"unknown reading-order kind {ref.kind!r}")

    def gt_label_at(self, ref: ReadingRef) -> Optional[str]:
        if ref.kind == "legible":
            return self.chars[ref.index].gt_label
        if ref.kind == "damaged":
            return self.damage_boxes[ref.index].gt_label
        raise ValueError(f"unknown reading-order kind {ref.kind!r}")

    def gt_transcript(self) -> str:
        """Ground-truth labels in reading order; positions without a label
        contribute nothing."""
        parts = []
        for ref in self.reading_order:
            label = self.gt_label_at(ref)
            if label:
                parts.append(label)
        return "".join(parts)


def _check_within(box: BBox, width: int, height: int, prefix: str) -> list[str]:
    if box.x_min < 0 or box.y_min < 0 or box.x_max > width or box.y_max > height:
        return [f"{prefix}: out-of-bounds violation (image is {width}x{height})"]
    return []


def validate_page(doc: PageDocument) -> list[str]:
    """Check every type invariant; returns violations as data (empty list
    means the document is well formed)."""
    violations: list[str] = []
    if doc.width <= 0 or doc.height <= 0:
        violations.append("image: non-positive dimensions")

    for i, obs in enumerate(doc.chars):
        prefix = f"chars[{i}].box"
        violations.extend(obs.box.violations(prefix))
        violations.extend(_check_within(obs.box, doc.width, doc.height, prefix))
        if obs.source not in CHAR_SOURCES:
            violations.append(f"chars[{i}].source: unknown source {obs.source!r}")
        last = None
        for j, (label, prob) in enumerate(obs.candidates):
            if not (0.0 <= prob <= 1.0):
                violations.append(f"chars[{i}].candidates[{j}]: prob outside [0,1]")
            if last is not None and prob > last:
                violations.append(f"chars[{i}].candidates[{j}]: probs not non-increasing")
            last = prob

    for i, dmg in enumerate(doc.damage_boxes):
        prefix = f"damage_boxes[{i}].box"
        violations.extend(dmg.box.violations(prefix))
        violations.extend(_check_within(dmg.box, doc.width, doc.height, prefix))

    for i, line in enumerate(doc.lines):
        for j in line.chars:
            if not (0 <= j < len(doc.chars)):
                violations.append(f"lines[{i}].chars: index {j} out of range")
        for j in line.damage_boxes:
            if not (0 <= j < len(doc.damage_boxes)):
                violations.append(f"lines[{i}].damage_boxes: index {j} out of range")

    seen_refs: set[tuple[str, int]] = set()
    for i, ref in enumerate(doc.reading_order):
        prefix = f"reading_order[{i}]"
        if ref.kind not in ("legible", "damaged"):
            violations.append(f"{prefix}: unknown kind {ref.kind!r}")
            continue
        pool = doc.chars if ref.kind == "legible" else doc.damage_boxes
        if not (0 <= ref.index < len(pool)):
            violations.append(f"{prefix}: index {ref.index} out of range")
            continue
        key = (ref.kind, ref.index)
        if key in seen_refs:
            violations.append(f"{prefix}: duplicate-reference violation")
        seen_refs.add(key)

    return violations


# --- Backend contracts -------------------------------------------------
#
# The three interfaces that decouple the pipeline from neural models. All
# implementations must be deterministic given identical inputs and seed,
# and must report probabilities in [0, 1].


class OcrBackend(Protocol):
    def recognize(self, image: np.ndarray, box: BBox, k: int) -> CharObservation:
        """Top-k candidates for the character inside `box` of `image`."""
        ...


class LmBackend(Protocol):
    def predict(self, context: str, k: int) -> dict[int, list[tuple[str, float]]]:
        """Per-slot Top-k candidates for the "[maskN]" markers in `context`.

        The response maps each queried slot number N to its candidate list,
        sorted by probability descending.
        """
        ...


class InpaintBackend(Protocol):
    def restore(self, patch: np.ndarray, content: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """Restore `patch` under `mask` guidance; same dimensions out."""
        ...
