"""Stage 2: per-slot content prediction fusing OCR and language-model
candidates, plus the text corruption generators used to build LM
training corpora.

Each damaged slot gets a recognizer pass over its pixels. High-confidence
reads are accepted outright; the rest are scored against language-model
suggestions with a composite that rewards probability mass, good rank on
either side, and agreement between the two sources.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fusion import MaskedText
from .model import LmBackend, OcrBackend

Candidates = Sequence[tuple[str, float]]


@dataclass(frozen=True)
class VlcpParams:
    """Fusion knobs: shortcut threshold, base weights, rank weight,
    agreement bonus, candidate depth."""

    tau: float = 0.9
    w_o: float = 0.6
    w_l: float = 0.4
    alpha: float = 0.05
    beta: float = 1.5
    k: int = 5

    def __post_init__(self) -> None:
        for name in ("tau", "w_o", "w_l"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0,1], got {value}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta < 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class ScoredCandidate:
    """One union label with its per-source evidence and composite score."""

    label: str
    p_o: float
    p_l: float
    r_o: int
    r_l: int
    base: float
    rank_score: float
    bonus_applied: bool
    composite: float


def _lookup(label: str, candidates: Candidates, k: int) -> tuple[float, int, bool]:
    """(prob, rank, present); absent labels score prob 0 at rank k."""
    for rank, (cand, prob) in enumerate(candidates):
        if cand == label:
            return float(prob), rank, True
    return 0.0, k, False


def vlcp_score(
    label: str,
    ocr_candidates: Candidates,
    lm_candidates: Candidates,
    params: VlcpParams = VlcpParams(),
) -> ScoredCandidate:
    """Score one label against both Top-k lists.

    Ranks are 0-indexed positions; a label missing from a list takes
    rank k with probability 0 on that side, so any present label
    outranks it. Labels found in both lists get the agreement bonus.
    """
    p_o, r_o, in_ocr = _lookup(label, ocr_candidates, params.k)
    p_l, r_l, in_lm = _lookup(label, lm_candidates, params.k)
    if not in_ocr and not in_lm:
        raise ValueError(f"label {label!r} absent from both candidate lists")
    base = params.w_o * p_o + params.w_l * p_l
    rank_score = params.alpha * (2 * params.k - r_o - r_l)
    bonus = in_ocr and in_lm
    composite = (base + rank_score) * (params.beta if bonus else 1.0)
    return ScoredCandidate(
        label=label,
        p_o=p_o,
        p_l=p_l,
        r_o=r_o,
        r_l=r_l,
        base=base,
        rank_score=rank_score,
        bonus_applied=bonus,
        composite=composite,
    )


def vlcp_select(
    ocr_candidates: Candidates,
    lm_candidates: Candidates,
    params: VlcpParams = VlcpParams(),
) -> list[ScoredCandidate]:
    """Score the label union of both lists, best first.

    Ties on composite fall to the higher OCR probability, then the
    lexicographically smaller label, so ordering is total.
    """
    seen: dict[str, None] = {}
    for cand, _ in list(ocr_candidates) + list(lm_candidates):
        seen.setdefault(cand, None)
    if not seen:
        raise ValueError("no candidates")
    scored = [vlcp_score(c, ocr_candidates, lm_candidates, params) for c in seen]
    scored.sort(key=lambda s: (-s.composite, -s.p_o, s.label))
    return scored


def _clean_candidates(raw: Candidates, k: int) -> list[tuple[str, float]]:
    """Sort descending (stable), drop duplicate labels, truncate to k."""
    ordered = sorted(
        ((str(label), float(prob)) for label, prob in raw),
        key=lambda pair: -pair[1],
    )
    out: list[tuple[str, float]] = []
    taken = set()
    for label, prob in ordered:
        if label in taken:
            continue
        taken.add(label)
        out.append((label, prob))
        if len(out) == k:
            break
    return out


@dataclass(frozen=True)
class SlotPrediction:
    """Outcome for one slot: chosen label plus review candidates.

    via is "shortcut" when the recognizer cleared tau on its own,
    "fused" when the composite ranking decided, "failed" when a backend
    error left the slot unresolved.
    """

    slot: int
    label: Optional[str]
    via: str
    ocr: tuple[tuple[str, float], ...] = ()
    lm: tuple[tuple[str, float], ...] = ()
    scored: tuple[ScoredCandidate, ...] = ()
    error: Optional[str] = None

    @property
    def alternatives(self) -> list[tuple[str, float]]:
        """Ranked candidates for human review, at most k deep."""
        if self.scored:
            return [(s.label, s.composite) for s in self.scored[:5]]
        return list(self.ocr[:5])


def vlcp_predict(
    masked: MaskedText,
    image: np.ndarray,
    ocr: OcrBackend,
    lm: LmBackend,
    params: VlcpParams = VlcpParams(),
) -> list[SlotPrediction]:
    """Predict content for every slot of a masked text.

    The recognizer runs on each slot's pixels first; slots whose top
    confidence exceeds tau are resolved immediately and never reach the
    language model. Remaining slots are batched into a single LM query
    whose context substitutes the shortcut answers and keeps the
    original slot numbers, then resolved by composite ranking. A backend
    failure marks only the affected slots; the rest still resolve.
    """
    slots = masked.slot_tokens()
    ocr_lists: dict[int, list[tuple[str, float]]] = {}
    errors: dict[int, str] = {}
    resolved: dict[int, str] = {}
    via: dict[int, str] = {}

    for token in slots:
        assert token.slot is not None
        try:
            obs = ocr.recognize(image, token.box, params.k)
        except Exception as exc:  # noqa: BLE001 - per-slot fault isolation
            errors[token.slot] = f"ocr: {exc}"
            ocr_lists[token.slot] = []
            continue
        cands = _clean_candidates(obs.candidates, params.k)
        ocr_lists[token.slot] = cands
        if cands and cands[0][1] > params.tau:
            resolved[token.slot] = cands[0][0]
            via[token.slot] = "shortcut"

    pending = [
        t.slot
        for t in slots
        if t.slot not in resolved and t.slot not in errors
    ]
    lm_lists: dict[int, list[tuple[str, float]]] = {s: [] for s in pending}
    if pending:
        context = masked.to_context(resolved)
        try:
            response = lm.predict(context, params.k)
        except Exception as exc:  # noqa: BLE001
            for s in pending:
                errors[s] = f"lm: {exc}"
        else:
            for s in pending:
                lm_lists[s] = _clean_candidates(response.get(s, []), params.k)

    out: list[SlotPrediction] = []
    for token in slots:
        s = token.slot
        assert s is not None
        if s in errors:
            out.append(
                SlotPrediction(
                    slot=s,
                    label=None,
                    via="failed",
                    ocr=tuple(ocr_lists.get(s, [])),
                    error=errors[s],
                )
            )
            continue
        if s in resolved:
            out.append(
                SlotPrediction(
                    slot=s,
                    label=resolved[s],
                    via="shortcut",
                    ocr=tuple(ocr_lists[s]),
                )
            )
            continue
        o_list = ocr_lists[s]
        l_list = lm_lists.get(s, [])
        if not o_list and not l_list:
            out.append(
                SlotPrediction(
                    slot=s,
                    label=None,
                    via="failed",
                    error="no candidates from either backend",
                )
            )
            continue
        scored = vlcp_select(o_list, l_list, params)
        out.append(
            SlotPrediction(
                slot=s,
                label=scored[0].label,
                via="fused",
                ocr=tuple(o_list),
                lm=tuple(l_list),
                scored=tuple(scored),
            )
        )
    return out


MASK_RATIO_RANGE = (0.05, 0.90)


def corrupt_text(
    text: str,
    mask_ratio: float,
    deletion_prob: float = 0.03,
    seed: int = 0,
) -> tuple[str, list[str]]:
    """Corrupt a training sentence into (masked input, slot answers).

    floor(mask_ratio * len) positions are drawn uniformly without
    replacement and replaced by "[maskN]" markers numbered left to
    right; each surviving character is then independently dropped with
    deletion_prob. Answers are the masked originals in slot order.
    """
    if not text:
        raise ValueError("text must be non-empty")
    lo, hi = MASK_RATIO_RANGE
    if not (lo <= mask_ratio <= hi):
        raise ValueError(
            f"mask_ratio must lie in [{lo}, {hi}], got {mask_ratio}"
        )
    if not (0.0 <= deletion_prob <= 1.0):
        raise ValueError(f"deletion_prob must lie in [0,1], got {deletion_prob}")

    n = len(text)
    count = int(math.floor(mask_ratio * n))
    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(n, size=count, replace=False).tolist()) if count else set()

    parts: list[str] = []
    targets: list[str] = []
    slot = 0
    for i, ch in enumerate(text):
        if i in chosen:
            slot += 1
            parts.append(f"[mask{slot}]")
            targets.append(ch)
        elif rng.random() >= deletion_prob:
            parts.append(ch)
    return "".join(parts), targets


def apply_variant_augmentation(
    text: str,
    variant_table: dict[str, Sequence[str]],
    replace_prob: float,
    seed: int = 0,
) -> str:
    """Swap standard characters for variant forms with replace_prob.

    Only characters present in the table consume randomness, so edits to
    the table do not shift replacements elsewhere in the text.
    """
    if not (0.0 <= replace_prob <= 1.0):
        raise ValueError(f"replace_prob must lie in [0,1], got {replace_prob}")
    rng = np.random.default_rng(seed)
    out: list[str] = []
    for ch in text:
        variants = variant_table.get(ch)
        if not variants:
            out.append(ch)
            continue
        if rng.random() < replace_prob:
            out.append(variants[int(rng.integers(len(variants)))])
        else:
            out.append(ch)
    return "".join(out)
