"""Hot numeric kernels with numba-compiled and pure-numpy variants.

The numba path is the default. Set DOCRESTORE_NO_NUMBA=1 to force the
pure-numpy fallback (also used automatically when numba is unavailable).
Both variants implement identical semantics; benchmarks/bench_kernels.py
compares them.
"""

import os

from . import _fallback

_flag = os.environ.get("DOCRESTORE_NO_NUMBA", "").strip().lower()
_force_fallback = _flag not in ("", "0", "false")

if _force_fallback:
    _impl = _fallback
    BACKEND = "numpy"
else:
    try:
        from . import _numba as _impl  # noqa: F401

        BACKEND = "numba"
    except ImportError:
        _impl = _fallback
        BACKEND = "numpy"

pairwise_iou = _impl.pairwise_iou
edit_alignment = _impl.edit_alignment

__all__ = ["pairwise_iou", "edit_alignment", "BACKEND"]
