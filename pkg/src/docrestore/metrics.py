"""Evaluation measures: character accuracy from edit alignment, Top-k
prediction accuracy, and detection precision/recall/F1."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .model import BBox


@dataclass(frozen=True)
class ArResult:
    """Edit-alignment error counts against a reference transcript.

    ar = (n_total - deletions - substitutions - insertions) / n_total
    and goes negative when insertions outnumber correct characters.
    """

    n_total: int
    deletions: int
    substitutions: int
    insertions: int
    ar: float


def _encode(ref: Sequence[str], hyp: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    codes: dict[str, int] = {}
    for ch in list(ref) + list(hyp):
        codes.setdefault(ch, len(codes))
    a = np.array([codes[c] for c in ref], dtype=np.int64)
    b = np.array([codes[c] for c in hyp], dtype=np.int64)
    return a, b


def ar(reference: Sequence[str], hypothesis: Sequence[str]) -> ArResult:
    """Character accuracy of a hypothesis transcript.

    Error counts come from a minimal-cost unit edit alignment; among
    minimal alignments the one with fewest substitutions, then fewest
    insertions, is counted.
    """
    if len(reference) == 0:
        raise ValueError("reference transcript must be non-empty")
    a, b = _encode(reference, hypothesis)
    dels, subs, ins = kernels.edit_alignment(a, b)
    n = len(reference)
    return ArResult(
        n_total=n,
        deletions=dels,
        substitutions=subs,
        insertions=ins,
        ar=(n - dels - subs - ins) / n,
    )


def topk_accuracy(
    candidates: Sequence[Sequence[str]],
    truths: Sequence[str],
    k: int,
) -> float:
    """Fraction of slots whose truth appears in the first k candidates."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(candidates) != len(truths):
        raise ValueError("candidates and truths must be parallel sequences")
    if not truths:
        raise ValueError("no slots to score")
    hits = sum(1 for cands, t in zip(candidates, truths) if t in list(cands)[:k])
    return hits / len(truths)


@dataclass(frozen=True)
class DetectionResult:
    precision: float
    recall: float
    f1: float
    matches: tuple[tuple[int, int], ...]  # (pred index, gt index)


def detection_prf(
    predictions: Sequence[tuple[BBox, float]],
    ground_truth: Sequence[BBox],
    iou_threshold: float = 0.5,
) -> DetectionResult:
    """Greedy confidence-ordered box matching.

    Predictions are visited by descending confidence (ties keep input
    order); each claims the unmatched ground-truth box of highest IoU at
    or above the threshold, lowest index on equal IoU. Empty sets score
    0 on the affected side by convention.
    """
    order = sorted(range(len(predictions)), key=lambda i: (-predictions[i][1], i))
    if predictions and ground_truth:
        matrix = np.asarray(
            kernels.pairwise_iou(
                np.array([p[0].as_list() for p in predictions], dtype=np.float64),
                np.array([g.as_list() for g in ground_truth], dtype=np.float64),
            )
        )
    else:
        matrix = np.zeros((len(predictions), len(ground_truth)))
    taken: set[int] = set()
    matches: list[tuple[int, int]] = []
    for pi in order:
        best_gi = -1
        best_iou = 0.0
        for gi in range(len(ground_truth)):
            if gi in taken:
                continue
            value = float(matrix[pi, gi])
            if value >= iou_threshold and value > best_iou:
                best_iou = value
                best_gi = gi
        if best_gi >= 0:
            taken.add(best_gi)
            matches.append((pi, best_gi))
    precision = len(matches) / len(predictions) if predictions else 0.0
    recall = len(matches) / len(ground_truth) if ground_truth else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return DetectionResult(
        precision=precision, recall=recall, f1=f1, matches=tuple(matches)
    )
