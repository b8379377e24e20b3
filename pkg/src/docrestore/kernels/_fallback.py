"""Pure-numpy / pure-python kernel implementations.

Reference semantics for the numba variants in `_numba`; used when numba
is unavailable or disabled via DOCRESTORE_NO_NUMBA=1.
"""

from __future__ import annotations

import numpy as np


def pairwise_iou(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """IoU matrix between two (n, 4) / (m, 4) arrays of [x0, y0, x1, y1]."""
    a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)

    ix0 = np.maximum(a[:, None, 0], b[None, :, 0])
    iy0 = np.maximum(a[:, None, 1], b[None, :, 1])
    ix1 = np.minimum(a[:, None, 2], b[None, :, 2])
    iy1 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(ix1 - ix0, 0.0, None) * np.clip(iy1 - iy0, 0.0, None)

    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def edit_alignment(ref: np.ndarray, hyp: np.ndarray) -> tuple[int, int, int]:
    """Deletion/substitution/insertion counts of the minimal edit alignment.

    Among minimal-cost alignments prefers fewer substitutions, then fewer
    insertions. Costs are packed into one integer as
    (total * B + subs) * B + ins with B large enough to avoid carries, so
    a plain scalar minimum realizes the lexicographic preference.
    """
    ref = np.asarray(ref, dtype=np.int64)
    hyp = np.asarray(hyp, dtype=np.int64)
    n, m = len(ref), len(hyp)
    base = n + m + 1
    del_cost = base * base  # total +1
    ins_cost = base * base + 1  # total +1, ins +1
    sub_cost = base * base + base  # total +1, subs +1

    prev = np.empty(m + 1, dtype=np.int64)
    cur = np.empty(m + 1, dtype=np.int64)
    for j in range(m + 1):
        prev[j] = j * ins_cost
    for i in range(1, n + 1):
        cur[0] = i * del_cost
        ri = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (0 if ri == hyp[j - 1] else sub_cost)
            best = prev[j] + del_cost
            cand = cur[j - 1] + ins_cost
            if cand < best:
                best = cand
            if diag < best:
                best = diag
            cur[j] = best
        prev, cur = cur, prev

    key = int(prev[m])
    total, rem = divmod(key, base * base)
    subs, ins = divmod(rem, base)
    dels = total - subs - ins
    return dels, subs, ins
