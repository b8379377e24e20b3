"""Numba-compiled kernel implementations (default path)."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _pairwise_iou(a, b, out):  # pragma: no cover - exercised via wrapper
    for i in range(a.shape[0]):
        ax0, ay0, ax1, ay1 = a[i, 0], a[i, 1], a[i, 2], a[i, 3]
        area_a = (ax1 - ax0) * (ay1 - ay0)
        for j in range(b.shape[0]):
            ix0 = max(ax0, b[j, 0])
            iy0 = max(ay0, b[j, 1])
            ix1 = min(ax1, b[j, 2])
            iy1 = min(ay1, b[j, 3])
            iw = ix1 - ix0
            ih = iy1 - iy0
            if iw <= 0.0 or ih <= 0.0:
                out[i, j] = 0.0
                continue
            inter = iw * ih
            area_b = (b[j, 2] - b[j, 0]) * (b[j, 3] - b[j, 1])
            union = area_a + area_b - inter
            out[i, j] = inter / union if union > 0.0 else 0.0


def pairwise_iou(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4))
    b = np.ascontiguousarray(np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4))
    out = np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    if a.shape[0] and b.shape[0]:
        _pairwise_iou(a, b, out)
    return out


@njit(cache=True)
def _edit_alignment(ref, hyp):  # pragma: no cover - exercised via wrapper
    n = ref.shape[0]
    m = hyp.shape[0]
    base = n + m + 1
    del_cost = base * base
    ins_cost = base * base + 1
    sub_cost = base * base + base

    prev = np.empty(m + 1, dtype=np.int64)
    cur = np.empty(m + 1, dtype=np.int64)
    for j in range(m + 1):
        prev[j] = j * ins_cost
    for i in range(1, n + 1):
        cur[0] = i * del_cost
        ri = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1]
            if ri != hyp[j - 1]:
                diag += sub_cost
            best = prev[j] + del_cost
            cand = cur[j - 1] + ins_cost
            if cand < best:
                best = cand
            if diag < best:
                best = diag
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp

    key = prev[m]
    total = key // (base * base)
    rem = key % (base * base)
    subs = rem // base
    ins = rem % base
    dels = total - subs - ins
    return dels, subs, ins


def edit_alignment(ref: np.ndarray, hyp: np.ndarray) -> tuple[int, int, int]:
    r = np.ascontiguousarray(np.asarray(ref, dtype=np.int64))
    h = np.ascontiguousarray(np.asarray(hyp, dtype=np.int64))
    d, s, i = _edit_alignment(r, h)
    return int(d), int(s), int(i)
