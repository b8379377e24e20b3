"""In-process backend implementations.

Stub oracles reproduce the qualitative regime the engine is designed
for: recognition is reliable on lightly damaged glyphs and collapses on
severe damage, while the language model knows the text but not the
pixels. A template-matching recognizer provides an honest pixel-driven
recognizer for synthetic pages rendered from a glyph atlas.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .glyphs import GlyphAtlas
from .model import BBox, CharObservation, DamageGrade
from .raster import crop

_TOKEN = re.compile(r"\[mask(\d+)\]|(.)", re.DOTALL)


def _box_key(box: BBox) -> tuple[int, int, int, int]:
    return (
        int(round(box.x_min * 100)),
        int(round(box.y_min * 100)),
        int(round(box.x_max * 100)),
        int(round(box.y_max * 100)),
    )


def _ladder(top: float, count: int) -> list[float]:
    """Descending tail probabilities after a top-1 prob.

    The tail mass is capped both by the leftover probability and by a
    multiple of the top, so even a tiny top-1 (severe-grade reads)
    stays strictly above every tail entry after sorting."""
    if count <= 0:
        return []
    tail = min(max(0.0, 1.0 - top) * 0.7, 1.5 * top)
    weights = [2.0**-i for i in range(count)]
    total = sum(weights)
    return [tail * wi / total for wi in weights]


def _draw_decoys(
    rng: np.random.Generator, alphabet: Sequence[str], exclude: str, count: int
) -> list[str]:
    pool = [ch for ch in alphabet if ch != exclude]
    if count >= len(pool):
        return pool
    picks = rng.choice(len(pool), size=count, replace=False)
    return [pool[int(i)] for i in picks]


@dataclass(frozen=True)
class GradeProfile:
    """How the stub recognizer behaves on one damage grade."""

    accuracy: float
    conf_range: tuple[float, float]
    topk_rate: Optional[float] = None  # truth-in-list rate; defaults to accuracy

    def __post_init__(self) -> None:
        if not (0.0 <= self.accuracy <= 1.0):
            raise ValueError("accuracy must lie in [0,1]")
        lo, hi = self.conf_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError("conf_range must be a non-empty range in [0,1]")
        if self.topk_rate is not None and not (
            self.accuracy <= self.topk_rate <= 1.0
        ):
            raise ValueError("topk_rate must lie in [accuracy, 1]")


DEFAULT_PROFILES: Mapping[DamageGrade, GradeProfile] = {
    DamageGrade.LIGHT: GradeProfile(accuracy=0.95, conf_range=(0.92, 0.99), topk_rate=1.0),
    DamageGrade.MEDIUM: GradeProfile(accuracy=0.65, conf_range=(0.30, 0.60), topk_rate=0.9),
    DamageGrade.SEVERE: GradeProfile(accuracy=0.04, conf_range=(0.01, 0.05), topk_rate=0.1),
}


class StubOcr:
    """Recognizer oracle driven by per-box ground truth and grade.

    Behavior is a pure function of (seed, box coordinates), so results
    do not depend on call order. Boxes without registered truth come
    back with no candidates at confidence 0.
    """

    def __init__(
        self,
        alphabet: Sequence[str],
        profiles: Mapping[DamageGrade, GradeProfile] = DEFAULT_PROFILES,
        seed: int = 0,
    ) -> None:
        if not alphabet:
            raise ValueError("alphabet must be non-empty")
        self.alphabet = tuple(alphabet)
        self.profiles = dict(profiles)
        self.seed = seed
        self._oracle: dict[tuple[int, int, int, int], tuple[str, DamageGrade]] = {}
        self.calls = 0

    def annotate(self, box: BBox, label: str, grade: DamageGrade) -> None:
        self._oracle[_box_key(box)] = (label, grade)

    def recognize(self, image: np.ndarray, box: BBox, k: int) -> CharObservation:
        self.calls += 1
        entry = self._oracle.get(_box_key(box))
        if entry is None:
            return CharObservation(box=box, candidates=(), source="ocr")
        label, grade = entry
        profile = self.profiles[grade]
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, *_box_key(box)]))
        conf = float(rng.uniform(*profile.conf_range))
        correct = float(rng.random()) < profile.accuracy
        topk_rate = profile.topk_rate if profile.topk_rate is not None else profile.accuracy

        tail = _ladder(conf, k - 1)
        if correct:
            labels = [label] + _draw_decoys(rng, self.alphabet, label, k - 1)
        else:
            decoys = _draw_decoys(rng, self.alphabet, label, k)
            labels = list(decoys[:k])
            miss = 1.0 - profile.accuracy
            in_list = (
                miss > 0
                and float(rng.random()) < (topk_rate - profile.accuracy) / miss
            )
            if in_list and k > 1:
                pos = int(rng.integers(1, k))
                labels[pos] = label
        probs = [conf] + tail
        cands = tuple((l, p) for l, p in zip(labels, probs))
        return CharObservation(box=box, candidates=cands, source="ocr", grade=grade)


@dataclass(frozen=True)
class StubLmConfig:
    top1_accuracy: float = 0.9
    top5_rate: float = 0.97
    top_prob: float = 0.9
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.top1_accuracy <= self.top5_rate <= 1.0):
            raise ValueError("need 0 <= top1_accuracy <= top5_rate <= 1")
        if not (0.0 < self.top_prob <= 1.0):
            raise ValueError("top_prob must lie in (0,1]")


class StubLm:
    """Language-model oracle that has effectively memorized a transcript.

    The context is parsed into characters and slot markers; when the
    token count matches the transcript the mapping is positional and
    each slot answers from its transcript character at the configured
    accuracy. Slots it cannot map get decoy candidates only. Per-slot
    randomness is keyed by slot number, independent of call order.
    """

    def __init__(
        self,
        transcript: str,
        alphabet: Sequence[str],
        config: StubLmConfig = StubLmConfig(),
    ) -> None:
        if not alphabet:
            raise ValueError("alphabet must be non-empty")
        self.transcript = transcript
        self.alphabet = tuple(alphabet)
        self.config = config
        self.calls = 0
        self.slots_served = 0

    def _truth_for(self, tokens: list[tuple[Optional[int], Optional[str]]]) -> dict[int, str]:
        if len(tokens) != len(self.transcript):
            return {}
        return {
            slot: self.transcript[i]
            for i, (slot, _) in enumerate(tokens)
            if slot is not None
        }

    def predict(self, context: str, k: int) -> dict[int, list[tuple[str, float]]]:
        self.calls += 1
        tokens: list[tuple[Optional[int], Optional[str]]] = []
        for m in _TOKEN.finditer(context):
            if m.group(1) is not None:
                tokens.append((int(m.group(1)), None))
            else:
                tokens.append((None, m.group(2)))
        truth_map = self._truth_for(tokens)
        cfg = self.config
        out: dict[int, list[tuple[str, float]]] = {}
        for slot, _ in tokens:
            if slot is None:
                continue
            self.slots_served += 1
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, slot]))
            probs = [cfg.top_prob] + _ladder(cfg.top_prob, k - 1)
            truth = truth_map.get(slot)
            u = float(rng.random())
            if truth is None or u >= cfg.top5_rate:
                labels = _draw_decoys(rng, self.alphabet, truth or "", k)
            elif u < cfg.top1_accuracy:
                labels = [truth] + _draw_decoys(rng, self.alphabet, truth, k - 1)
            else:
                labels = _draw_decoys(rng, self.alphabet, truth, k)[:k]
                pos = int(rng.integers(1, k)) if k > 1 else 0
                pos = min(pos, len(labels) - 1) if labels else 0
                if labels:
                    labels[pos] = truth
                else:
                    labels = [truth]
            out[slot] = list(zip(labels, probs[: len(labels)]))
        return out


class TemplateOcr:
    """Recognizer that actually reads pixels: correlation against the
    glyph atlas, sharpened into a candidate distribution.

    Clean renders of atlas glyphs correlate near 1.0 and clear the
    shortcut threshold; blank or obliterated boxes correlate with
    nothing and fall under the ambiguity gate.
    """

    def __init__(self, atlas: GlyphAtlas, sharpen: float = 8.0) -> None:
        self.atlas = atlas
        self.sharpen = sharpen
        self.calls = 0

    def recognize(self, image: np.ndarray, box: BBox, k: int) -> CharObservation:
        self.calls += 1
        region = crop(image, box)
        matches = self.atlas.match(region)
        scores = np.clip(np.array([s for _, s in matches]), 0.0, 1.0)
        top = float(scores[0]) if scores.size else 0.0
        weights = scores**self.sharpen
        total = float(weights.sum())
        if total <= 0.0 or top <= 0.0:
            return CharObservation(box=box, candidates=(), source="ocr")
        cands = []
        for (ch, _), w in zip(matches[:k], weights[:k]):
            prob = float(w) / total * top
            if prob > 1e-6:
                cands.append((ch, min(1.0, prob)))
        return CharObservation(box=box, candidates=tuple(cands), source="ocr")


class NullLm:
    """Language model that knows nothing; slots fuse on recognition only."""

    def __init__(self) -> None:
        self.calls = 0

    def predict(self, context: str, k: int) -> dict[int, list[tuple[str, float]]]:
        self.calls += 1
        return {}


class StubInpaint:
    """Inpainting stand-ins: glyph stamping, identity, or constant fill.

    The default "glyph" mode paints masked pixels with the local
    background estimate, then copies the content raster's ink on top, so
    restored boxes contain legible glyph shapes.
    """

    def __init__(self, mode: str = "glyph", constant: int = 200) -> None:
        if mode not in ("glyph", "identity", "stamp"):
            raise ValueError(f"unknown stub mode {mode!r}")
        self.mode = mode
        self.constant = constant
        self.calls = 0

    def restore(
        self, patch: np.ndarray, content: np.ndarray, mask: np.ndarray
    ) -> np.ndarray:
        self.calls += 1
        if patch.shape != content.shape or patch.shape != mask.shape:
            raise ValueError(
                f"dimension mismatch: patch {patch.shape}, content "
                f"{content.shape}, mask {mask.shape}"
            )
        if self.mode == "identity":
            return patch
        out = patch.copy()
        sel = mask == 1
        if self.mode == "stamp":
            out[sel] = self.constant
            return out
        background = patch[~sel]
        bg = int(np.median(background)) if background.size else 245
        out[sel] = bg
        ink = sel & (content < 200)
        out[ink] = content[ink]
        return out
