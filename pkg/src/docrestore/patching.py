"""Stage 3: patch-autoregressive restoration scheduling and execution.

Damage boxes are restored in P-sized windows slid with stride S from the
corner of the damage extent holding the least damage, so each window
sees as much already-restored context as possible. A window restores
only boxes it fully contains; boxes it merely clips are deferred to a
later window and masked out of the current one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .model import BBox, InpaintBackend
from .raster import box_mask, pixel_bounds

CORNERS = ("TL", "TR", "BL", "BR")


@dataclass(frozen=True)
class ParParams:
    """Window geometry: patch size P and stride S, 0 < S <= P."""

    patch_size: int = 448
    stride: int = 224

    def __post_init__(self) -> None:
        if self.patch_size <= 0:
            raise ValueError(f"patch_size must be positive, got {self.patch_size}")
        if not (0 < self.stride <= self.patch_size):
            raise ValueError(
                f"stride must satisfy 0 < S <= P, got S={self.stride} P={self.patch_size}"
            )


@dataclass(frozen=True)
class PatchStep:
    """One executed window: its clipped bounds, the box ids it restores,
    and the ids it defers because they cross its border."""

    window: BBox
    contained: tuple[int, ...]
    deferred: tuple[int, ...]
    corner: str


@dataclass(frozen=True)
class PatchPlan:
    steps: tuple[PatchStep, ...]
    start_corner: Optional[str] = None

    @property
    def assignment(self) -> dict[int, int]:
        """Damage box id -> index of the step that restores it."""
        out: dict[int, int] = {}
        for i, step in enumerate(self.steps):
            for box_id in step.contained:
                out[box_id] = i
        return out


def compute_extent(boxes: Sequence[BBox]) -> BBox:
    """Minimal axis-aligned box containing every input box."""
    if not boxes:
        raise ValueError("extent of zero boxes is undefined")
    return BBox(
        x_min=min(b.x_min for b in boxes),
        y_min=min(b.y_min for b in boxes),
        x_max=max(b.x_max for b in boxes),
        y_max=max(b.y_max for b in boxes),
    )


def _clip(x0: float, y0: float, x1: float, y1: float, w: int, h: int) -> Optional[BBox]:
    cx0, cy0 = max(0.0, x0), max(0.0, y0)
    cx1, cy1 = min(float(w), x1), min(float(h), y1)
    if cx1 <= cx0 or cy1 <= cy0:
        return None
    return BBox(cx0, cy0, cx1, cy1)


def _corner_window(corner: str, anchor: BBox, p: int, w: int, h: int) -> Optional[BBox]:
    """P x P patch anchored at one corner of the anchor box, clipped."""
    x = anchor.x_min if corner in ("TL", "BL") else anchor.x_max - p
    y = anchor.y_min if corner in ("TL", "TR") else anchor.y_max - p
    return _clip(x, y, x + p, y + p, w, h)


def select_start_corner(
    extent: BBox, boxes: Sequence[BBox], p: int, width: int, height: int
) -> str:
    """Corner of the extent whose anchored patch holds the fewest boxes.

    Restoration starts where damage is thinnest so later windows carry
    restored context into denser regions. Ties resolve in the fixed
    order TL, TR, BL, BR.
    """
    if not boxes:
        raise ValueError("corner selection needs at least one box")
    best_corner = CORNERS[0]
    best_count = None
    for corner in CORNERS:
        window = _corner_window(corner, extent, p, width, height)
        count = (
            sum(1 for b in boxes if window.contains(b)) if window is not None else 0
        )
        if best_count is None or count < best_count:
            best_corner, best_count = corner, count
    return best_corner


def _grid(corner: str, p: int, s: int, w: int, h: int) -> list[tuple[float, float]]:
    """Window origins in traversal order: row-major away from the corner."""
    if corner in ("TL", "BL"):
        xs = []
        x = 0
        while x < w:
            xs.append(float(x))
            x += s
    else:
        xs = []
        x = w - p
        while x + p > 0:
            xs.append(float(x))
            x -= s
    if corner in ("TL", "TR"):
        ys = []
        y = 0
        while y < h:
            ys.append(float(y))
            y += s
    else:
        ys = []
        y = h - p
        while y + p > 0:
            ys.append(float(y))
            y -= s
    return [(x, y) for y in ys for x in xs]


def plan_patches(
    width: int,
    height: int,
    boxes: Sequence[BBox],
    params: ParParams = ParParams(),
) -> PatchPlan:
    """Simulate the restoration schedule without touching pixels.

    Outer loop: take the unrestored boxes, find their extent, pick the
    emptiest corner, sweep the stride grid from that corner assigning
    every window its fully-contained unrestored boxes. Windows that
    assign nothing leave no step. With a stride above P/2 a sweep can
    strand a box no grid window fully contains; a dedicated window
    anchored on the stranded box is emitted so the plan always
    terminates.
    """
    p, s = params.patch_size, params.stride
    for i, b in enumerate(boxes):
        if b.width > s or b.height > s:
            raise ValueError(
                f"damage box {i} exceeds guaranteed containment; increase P/S"
            )

    unrestored = set(range(len(boxes)))
    steps: list[PatchStep] = []
    start_corner: Optional[str] = None

    while unrestored:
        pending = sorted(unrestored)
        extent = compute_extent([boxes[i] for i in pending])
        corner = select_start_corner(
            extent, [boxes[i] for i in pending], p, width, height
        )
        if start_corner is None:
            start_corner = corner
        assigned_this_pass = 0
        for x, y in _grid(corner, p, s, width, height):
            window = _clip(x, y, x + p, y + p, width, height)
            if window is None:
                continue
            contained = tuple(i for i in sorted(unrestored) if window.contains(boxes[i]))
            if not contained:
                continue
            deferred = tuple(
                i
                for i in sorted(unrestored)
                if i not in contained and window.intersects(boxes[i])
            )
            steps.append(PatchStep(window, contained, deferred, corner))
            unrestored.difference_update(contained)
            assigned_this_pass += len(contained)
            if not unrestored:
                break
        if assigned_this_pass == 0:
            # Stranded box: no grid window contains it. Anchor one on it.
            i = pending[0]
            bx = boxes[i]
            x0 = min(max(0.0, bx.x_min), float(max(0, width - p)))
            y0 = min(max(0.0, bx.y_min), float(max(0, height - p)))
            window = _clip(x0, y0, x0 + p, y0 + p, width, height)
            assert window is not None and window.contains(bx)
            contained = tuple(
                j for j in sorted(unrestored) if window.contains(boxes[j])
            )
            deferred = tuple(
                j
                for j in sorted(unrestored)
                if j not in contained and window.intersects(boxes[j])
            )
            steps.append(PatchStep(window, contained, deferred, corner))
            unrestored.difference_update(contained)
    return PatchPlan(steps=tuple(steps), start_corner=start_corner)


class GlyphSource(Protocol):
    def render(self, image: np.ndarray, box: BBox, ch: str) -> None: ...


@dataclass(frozen=True)
class RenderedPatch:
    """Backend inputs for one window: content guidance, restoration
    mask, pixels to leave alone, and any rendering warnings."""

    content: np.ndarray
    mask: np.ndarray
    ignore: np.ndarray
    warnings: tuple[str, ...] = ()


def render_content_mask(
    window: BBox,
    assigned: Sequence[tuple[BBox, Optional[str]]],
    glyphs: GlyphSource,
    deferred: Sequence[BBox] = (),
) -> RenderedPatch:
    """Render the content raster and binary mask for one window.

    The mask is 1 inside assigned boxes and 0 elsewhere; pixels of
    deferred boxes are forced to 0 and reported separately as an ignore
    region. Content renders each predicted glyph scaled to its box on a
    blank field; a label without a glyph degrades to a box outline with
    a warning, and a missing label leaves the box blank for the backend
    to fill from context.
    """
    # Window coords are absolute; rasters are window-local.
    w = max(1, int(round(window.x_max - window.x_min)))
    h = max(1, int(round(window.y_max - window.y_min)))
    origin = (window.x_min, window.y_min)
    content = np.full((h, w), 255, dtype=np.uint8)
    warnings: list[str] = []

    boxes_only = [b for b, _ in assigned]
    mask = box_mask((h, w), boxes_only, origin=origin)
    ignore = box_mask((h, w), deferred, origin=origin)
    mask[ignore == 1] = 0

    for box, label in assigned:
        local = BBox(
            box.x_min - origin[0],
            box.y_min - origin[1],
            box.x_max - origin[0],
            box.y_max - origin[1],
        )
        if label is None:
            warnings.append(f"box at {box.as_list()} has no predicted label")
            continue
        try:
            glyphs.render(content, local, label)
        except KeyError:
            bx0, by0, bx1, by1 = pixel_bounds(local, w, h)
            if bx1 > bx0 and by1 > by0:
                content[by0:by1, bx0:bx1] = 255
                content[by0, bx0:bx1] = 0
                content[by1 - 1, bx0:bx1] = 0
                content[by0:by1, bx0] = 0
                content[by0:by1, bx1 - 1] = 0
            warnings.append(f"no glyph for label {label!r}; rendered outline")
    return RenderedPatch(
        content=content, mask=mask, ignore=ignore, warnings=tuple(warnings)
    )


@dataclass(frozen=True)
class RestoreResult:
    image: np.ndarray
    plan: PatchPlan
    warnings: tuple[str, ...] = ()


class RestoreStepError(RuntimeError):
    """Backend failure mid-plan; carries the partial image for retention."""

    def __init__(self, step_index: int, cause: str, partial: np.ndarray, plan: PatchPlan):
        super().__init__(f"inpaint backend failed at step {step_index}: {cause}")
        self.step_index = step_index
        self.partial = partial
        self.plan = plan


def restore_page(
    image: np.ndarray,
    boxes: Sequence[BBox],
    labels: Sequence[Optional[str]],
    inpaint: InpaintBackend,
    glyphs: GlyphSource,
    params: ParParams = ParParams(),
) -> RestoreResult:
    """Execute the patch plan over a working copy of the page.

    Each step crops the current working image, renders content and mask,
    calls the backend, and pastes back only the masked pixels, so later
    windows see earlier restorations and untouched pixels stay
    bit-identical no matter what the backend returns.
    """
    if len(boxes) != len(labels):
        raise ValueError("boxes and labels must be parallel sequences")
    h, w = image.shape[:2]
    plan = plan_patches(w, h, boxes, params)
    work = image.copy()
    warnings: list[str] = []
    for si, step in enumerate(plan.steps):
        x0, y0, x1, y1 = pixel_bounds(step.window, w, h)
        patch = work[y0:y1, x0:x1]
        rendered = render_content_mask(
            step.window,
            [(boxes[i], labels[i]) for i in step.contained],
            glyphs,
            deferred=[boxes[i] for i in step.deferred],
        )
        warnings.extend(f"step {si}: {msg}" for msg in rendered.warnings)
        mask = rendered.mask
        if mask.shape != patch.shape:
            # Rounding between float window and pixel crop; align shapes.
            mh = min(mask.shape[0], patch.shape[0])
            mw = min(mask.shape[1], patch.shape[1])
            mask = mask[:mh, :mw]
            patch = patch[:mh, :mw]
        try:
            result = inpaint.restore(patch.copy(), rendered.content, mask)
            result = np.asarray(result)
            if result.shape != patch.shape:
                raise ValueError(
                    f"backend returned shape {result.shape}, expected {patch.shape}"
                )
        except Exception as exc:  # noqa: BLE001 - abort with partial retained
            raise RestoreStepError(si, str(exc), work, plan) from exc
        sel = mask == 1
        patch[sel] = result.astype(np.uint8)[sel]
    return RestoreResult(image=work, plan=plan, warnings=tuple(warnings))
