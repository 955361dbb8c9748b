"""Benchmark: compiled kernels versus the pure-numpy fallback.

Times each hot kernel on a representative workload and prints one row per
kernel with both backends and the speedup.  Run from the repository root:

    python bench/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from respq._kernels import _ref

try:
    from respq._kernels import _core
except ImportError:
    _core = None

from respq.scoring import enumerate_masks


def timeit(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(
        np.sin(2 * np.pi * 0.25 * np.arange(610) / 61.0) + 0.3 * rng.standard_normal(610)
    )
    basis = np.ascontiguousarray(np.linalg.qr(rng.standard_normal((4, 4)))[0][:, :2])
    masks = np.array([m.included for m in enumerate_masks(10, 2)], dtype=np.uint8)
    quality = np.ascontiguousarray(rng.uniform(size=(51, 10, 10)))
    errors = np.ascontiguousarray(rng.uniform(0, 8, size=(51, 10)))
    valid = np.ones((51, 10), dtype=np.uint8)
    return [
        ("sign_changes(610)", "sign_changes", (x,)),
        ("autocorr_lags(610, 4)", "autocorr_lags", (x, 4)),
        ("normalized_autocorr(610, 305 lags)", "normalized_autocorr_range", (x, 31, 305)),
        ("music_denominator(4x2, 4096)", "music_denominator", (basis, 61.0, 4096)),
        ("tmcc_mean(610, T=244)", "tmcc_mean", (x, 244, 61)),
        ("subset_scan(1013 masks, 51x10)", "subset_scan", (masks, quality, errors, valid)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    print(f"{'kernel':38} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for label, name, call_args in workloads():
        t_ref = timeit(getattr(_ref, name), call_args, args.repeat)
        if _core is None:
            print(f"{label:38} {t_ref * 1e3:9.2f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_core = timeit(getattr(_core, name), call_args, args.repeat)
        print(
            f"{label:38} {t_ref * 1e3:9.2f}ms {t_core * 1e3:9.2f}ms {t_ref / t_core:7.1f}x"
        )
    if _core is None:
        print("\ncompiled extension not built; install with `pip install -e . --no-build-isolation`")


if __name__ == "__main__":
    main()
