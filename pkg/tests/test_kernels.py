"""Numeric kernel semantics, plus parity between the numba and numpy
variants (they must be interchangeable)."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import docrestore.kernels as kernels
from docrestore.kernels import _fallback

try:
    from docrestore.kernels import _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def ref_iou(a, b):
    """Scalar reference IoU for one box pair."""
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


boxes_arrays = st.integers(0, 6).flatmap(
    lambda n: st.lists(
        st.tuples(
            st.floats(0, 50),
            st.floats(0, 50),
            st.floats(0.1, 50),
            st.floats(0.1, 50),
        ).map(lambda t: [t[0], t[1], t[0] + t[2], t[1] + t[3]]),
        min_size=n,
        max_size=n,
    )
)


class TestPairwiseIou:
    def test_known_values(self):
        a = np.array([[0, 0, 10, 10]], dtype=float)
        b = np.array([[0, 0, 10, 10], [5, 0, 15, 10], [20, 20, 30, 30]], dtype=float)
        got = kernels.pairwise_iou(a, b)[0]
        assert got[0] == pytest.approx(1.0)
        assert got[1] == pytest.approx(50 / 150)
        assert got[2] == 0.0

    def test_empty_inputs(self):
        empty = np.zeros((0, 4))
        one = np.array([[0, 0, 1, 1]], dtype=float)
        assert kernels.pairwise_iou(empty, one).shape == (0, 1)
        assert kernels.pairwise_iou(one, empty).shape == (1, 0)

    @given(boxes_arrays, boxes_arrays)
    @settings(max_examples=60, deadline=None)
    def test_matches_scalar_reference(self, a, b):
        a = np.array(a, dtype=float).reshape(-1, 4)
        b = np.array(b, dtype=float).reshape(-1, 4)
        got = kernels.pairwise_iou(a, b)
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                assert got[i, j] == pytest.approx(ref_iou(a[i], b[j]), abs=1e-12)


def brute_levenshtein(ref, hyp):
    """Plain DP over (distance only); oracle for the total count."""
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[n][m]


class TestEditAlignment:
    def test_identity(self):
        assert kernels.edit_alignment(np.arange(5), np.arange(5)) == (0, 0, 0)

    def test_pure_operations(self):
        a = np.array([1, 2, 3, 4])
        assert kernels.edit_alignment(a, np.array([1, 2, 9, 4])) == (0, 1, 0)
        assert kernels.edit_alignment(a, np.array([1, 2, 4])) == (1, 0, 0)
        assert kernels.edit_alignment(a, np.array([1, 2, 3, 9, 4])) == (0, 0, 1)

    def test_empty_sides(self):
        a = np.array([1, 2, 3])
        assert kernels.edit_alignment(a, np.array([], dtype=np.int64)) == (3, 0, 0)
        assert kernels.edit_alignment(np.array([], dtype=np.int64), a) == (0, 0, 3)

    def test_prefers_substitution_split_reported_consistently(self):
        # "ab" -> "ba": either two substitutions or one del + one ins, both
        # total 2. Fewer substitutions wins, so the del+ins split is chosen.
        d, s, i = kernels.edit_alignment(np.array([1, 2]), np.array([2, 1]))
        assert (d, s, i) == (1, 0, 1)

    @given(
        st.lists(st.integers(0, 2), max_size=7),
        st.lists(st.integers(0, 2), max_size=7),
    )
    @settings(max_examples=120, deadline=None)
    def test_total_matches_levenshtein(self, ref, hyp):
        d, s, i = kernels.edit_alignment(
            np.array(ref, dtype=np.int64), np.array(hyp, dtype=np.int64)
        )
        assert d + s + i == brute_levenshtein(ref, hyp)
        # counts must be consistent with the length difference
        assert len(hyp) == len(ref) - d + i


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
class TestBackendParity:
    @given(boxes_arrays, boxes_arrays)
    @settings(max_examples=40, deadline=None)
    def test_iou_parity(self, a, b):
        a = np.array(a, dtype=float).reshape(-1, 4)
        b = np.array(b, dtype=float).reshape(-1, 4)
        np.testing.assert_allclose(
            _numba.pairwise_iou(a, b), _fallback.pairwise_iou(a, b), atol=1e-12
        )

    @given(
        st.lists(st.integers(0, 4), max_size=8),
        st.lists(st.integers(0, 4), max_size=8),
    )
    @settings(max_examples=60, deadline=None)
    def test_edit_parity(self, ref, hyp):
        r = np.array(ref, dtype=np.int64)
        h = np.array(hyp, dtype=np.int64)
        assert _numba.edit_alignment(r, h) == _fallback.edit_alignment(r, h)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, DOCRESTORE_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "import docrestore.kernels as k; print(k.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"
