"""Stage 1: damage localization fusion and reading-order sequencing.

Ambiguous OCR boxes (confidence below the gate) are merged with damage
detector boxes: a detector box always survives; an ambiguous OCR box
survives only when its best IoU against every detector box stays at or
below the overlap threshold. The merged boxes are then ordered into a
masked-text sequence for content prediction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .model import BBox, CharObservation, PageDocument, ReadingRef

LAYOUTS = ("vertical-rtl", "horizontal-ltr")


@dataclass(frozen=True)
class FusionParams:
    """Knobs for the box merge: OCR ambiguity gate and IoU overlap cut."""

    ocr_conf_threshold: float = 0.1
    iou_threshold: float = 0.5

    def __post_init__(self) -> None:
        for name in ("ocr_conf_threshold", "iou_threshold"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0,1], got {value}")


def iou(a: BBox, b: BBox) -> float:
    """Intersection area over union area; 0 for disjoint boxes."""
    ix0 = max(a.x_min, b.x_min)
    iy0 = max(a.y_min, b.y_min)
    ix1 = min(a.x_max, b.x_max)
    iy1 = min(a.y_max, b.y_max)
    iw = ix1 - ix0
    ih = iy1 - iy0
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


def boxes_to_array(boxes: Sequence[BBox]) -> np.ndarray:
    return np.array([b.as_list() for b in boxes], dtype=np.float64).reshape(-1, 4)


def collect_ambiguous(
    chars: Sequence[CharObservation], params: FusionParams = FusionParams()
) -> list[BBox]:
    """Boxes of observations whose confidence falls strictly below the
    gate, in input order."""
    return [obs.box for obs in chars if obs.confidence < params.ocr_conf_threshold]


def fuse(
    ambiguous: Sequence[BBox],
    detected: Sequence[BBox],
    params: FusionParams = FusionParams(),
) -> list[BBox]:
    """Merge ambiguous OCR boxes with detector boxes.

    Output order is fixed for downstream determinism: detector boxes in
    input order, then retained ambiguous boxes in input order. An
    ambiguous box whose max IoU against the detector set exceeds the
    threshold is dropped (the detector box already covers it); max IoU
    exactly at the threshold is retained.
    """
    merged = list(detected)
    if not ambiguous:
        return merged
    if not detected:
        merged.extend(ambiguous)
        return merged
    matrix = kernels.pairwise_iou(boxes_to_array(ambiguous), boxes_to_array(detected))
    best = matrix.max(axis=1)
    merged.extend(box for box, m in zip(ambiguous, best) if m <= params.iou_threshold)
    return merged


def _h_overlap(a: BBox, b: BBox) -> float:
    return max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))


def _v_overlap(a: BBox, b: BBox) -> float:
    return max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))


def reading_order(page: PageDocument, layout: str = "vertical-rtl") -> list[ReadingRef]:
    """Linearize every char and damage box into natural reading order.

    vertical-rtl (classical Chinese): boxes are clustered into columns,
    two boxes sharing a column iff their horizontal overlap covers at
    least half of the narrower box; columns run right to left, entries
    within a column top to bottom. horizontal-ltr is the transpose: rows
    top to bottom, entries left to right. Deterministic for any input;
    the output references every box exactly once.
    """
    if layout not in LAYOUTS:
        raise ValueError(f"unsupported layout {layout!r}; expected one of {LAYOUTS}")

    pool: list[tuple[ReadingRef, BBox]] = []
    for i, obs in enumerate(page.chars):
        pool.append((ReadingRef("legible", i), obs.box))
    for i, dmg in enumerate(page.damage_boxes):
        pool.append((ReadingRef("damaged", i), dmg.box))
    if not pool:
        return []

    if layout == "vertical-rtl":
        # Process right to left so that group creation order is column order.
        indexed = sorted(
            range(len(pool)),
            key=lambda i: (-pool[i][1].center[0], pool[i][1].y_min, i),
        )
        overlap = _h_overlap
        extent = lambda b: b.width
        within_key = lambda i: (pool[i][1].y_min, -pool[i][1].center[0], i)
    else:
        indexed = sorted(
            range(len(pool)),
            key=lambda i: (pool[i][1].center[1], pool[i][1].x_min, i),
        )
        overlap = _v_overlap
        extent = lambda b: b.height
        within_key = lambda i: (pool[i][1].x_min, pool[i][1].center[1], i)

    groups: list[tuple[BBox, list[int]]] = []  # (anchor box, member indices)
    for i in indexed:
        box = pool[i][1]
        for g, (anchor, members) in enumerate(groups):
            narrower = min(extent(anchor), extent(box))
            threshold = 0.5 * narrower if narrower > 0 else 0.0
            shared = overlap(anchor, box)
            if narrower > 0 and shared >= threshold and shared > 0:
                members.append(i)
                break
        else:
            groups.append((box, [i]))

    out: list[ReadingRef] = []
    for _, members in groups:
        for i in sorted(members, key=within_key):
            out.append(pool[i][0])
    return out


@dataclass(frozen=True)
class MaskedToken:
    """One reading-order position: a legible character or a numbered slot."""

    kind: str  # "char" | "slot"
    box: BBox
    ref: ReadingRef
    label: Optional[str] = None  # legible positions only
    slot: Optional[int] = None  # damaged positions only, 1-based


@dataclass(frozen=True)
class MaskedText:
    """The Stage-1 output sequence: legible chars plus numbered mask slots."""

    tokens: tuple[MaskedToken, ...]

    @property
    def slot_map(self) -> dict[int, BBox]:
        return {t.slot: t.box for t in self.tokens if t.kind == "slot"}

    @property
    def slot_count(self) -> int:
        return sum(1 for t in self.tokens if t.kind == "slot")

    def slot_tokens(self) -> list[MaskedToken]:
        return [t for t in self.tokens if t.kind == "slot"]

    def to_context(self, resolved: Optional[Mapping[int, str]] = None) -> str:
        """Render as text with "[maskN]" markers for unresolved slots.

        Slots present in `resolved` are rendered as their resolved label,
        which narrows the markers to the slots still being queried.
        """
        resolved = resolved or {}
        parts = []
        for t in self.tokens:
            if t.kind == "char":
                parts.append(t.label or "")
            elif t.slot in resolved:
                parts.append(resolved[t.slot])
            else:
                parts.append(f"[mask{t.slot}]")
        return "".join(parts)


def build_masked_text(page: PageDocument, order: Sequence[ReadingRef]) -> MaskedText:
    """Turn ordered positions into the masked-text sequence.

    Legible positions contribute their top-1 label; damaged positions
    become numbered slots 1..n in reading order. A page without damage
    yields a MaskedText with no slots.
    """
    tokens = []
    slot = 0
    for ref in order:
        box = page.resolve_box(ref)
        if ref.kind == "legible":
            obs = page.chars[ref.index]
            label = obs.top_label
            if label is None:
                raise ValueError(
                    f"legible position chars[{ref.index}] has no candidates"
                )
            tokens.append(MaskedToken(kind="char", box=box, ref=ref, label=label))
        else:
            slot += 1
            tokens.append(MaskedToken(kind="slot", box=box, ref=ref, slot=slot))
    return MaskedText(tokens=tuple(tokens))
