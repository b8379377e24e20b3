"""Timing comparison of the compiled and pure-numpy kernel variants.

Both implementations are imported directly, so the DOCRESTORE_NO_NUMBA
switch is not needed here. Run:

    python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from docrestore.kernels import _fallback

try:
    from docrestore.kernels import _numba
except ImportError:
    _numba = None


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def random_boxes(rng, n):
    x0 = rng.uniform(0, 1000, n)
    y0 = rng.uniform(0, 1000, n)
    w = rng.uniform(1, 50, n)
    h = rng.uniform(1, 50, n)
    return np.stack([x0, y0, x0 + w, y0 + h], axis=1)


def iou_workloads(rng):
    for n, m in ((50, 50), (300, 300), (1000, 1000)):
        yield f"pairwise_iou {n}x{m}", (random_boxes(rng, n), random_boxes(rng, m))


def alignment_workloads(rng):
    for n, m in ((20, 20), (200, 210), (1000, 1000)):
        ref = rng.integers(0, 50, n).astype(np.int64)
        hyp = rng.integers(0, 50, m).astype(np.int64)
        yield f"edit_alignment {n}x{m}", (ref, hyp)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = []
    for name, payload in iou_workloads(rng):
        cases.append((name, "pairwise_iou", payload))
    for name, payload in alignment_workloads(rng):
        cases.append((name, "edit_alignment", payload))

    if _numba is not None:
        # trigger compilation outside the timed region
        _numba.pairwise_iou(random_boxes(rng, 2), random_boxes(rng, 2))
        _numba.edit_alignment(
            np.array([1, 2], dtype=np.int64), np.array([2, 1], dtype=np.int64)
        )

    print(f"{'workload':<28}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, fn_name, payload in cases:
        numpy_t = time_call(getattr(_fallback, fn_name), *payload, repeats=args.repeats)
        if _numba is None:
            print(f"{name:<28}{numpy_t * 1e3:>10.2f}ms{'-':>12}{'-':>10}")
            continue
        numba_t = time_call(getattr(_numba, fn_name), *payload, repeats=args.repeats)
        ratio = numpy_t / numba_t if numba_t > 0 else float("inf")
        print(
            f"{name:<28}{numpy_t * 1e3:>10.2f}ms{numba_t * 1e3:>10.2f}ms"
            f"{ratio:>9.1f}x"
        )

    # both variants must agree on a shared workload
    a, b = random_boxes(rng, 64), random_boxes(rng, 64)
    ref = rng.integers(0, 10, 300).astype(np.int64)
    hyp = rng.integers(0, 10, 310).astype(np.int64)
    if _numba is not None:
        assert np.allclose(_fallback.pairwise_iou(a, b), _numba.pairwise_iou(a, b))
        assert _fallback.edit_alignment(ref, hyp) == _numba.edit_alignment(ref, hyp)
        print("parity check: identical results from both backends")
    else:
        print("numba unavailable; timed the numpy fallback only")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
