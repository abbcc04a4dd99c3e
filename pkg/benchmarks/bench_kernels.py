"""Benchmark the compiled similarity kernels against the NumPy fallback.

Workload shapes mirror a real corpus run: grounding a handful of phrase
embeddings against a full tag universe, collapsing a few dozen grounded
tags, and cross-matching two small tag sets, thousands of times over.

Usage: python benchmarks/bench_kernels.py [repeats]
"""

import sys
import time

import numpy as np

from sbf import _kern_py

try:
    from sbf import _simkern
except ImportError:
    _simkern = None


def unit_rows(rng, n, dim):
    m = rng.normal(size=(n, dim))
    return np.ascontiguousarray(m / np.linalg.norm(m, axis=1, keepdims=True))


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(5):
        start = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - start) / repeats)
    return best


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 200
    rng = np.random.default_rng(0)

    universe = unit_rows(rng, 632, 384)   # full tag universe
    phrases = unit_rows(rng, 3, 384)      # phrases of one caption
    grounded = unit_rows(rng, 30, 384)    # grounded tags before dedup
    side_a = unit_rows(rng, 8, 384)
    side_b = unit_rows(rng, 6, 384)

    workloads = [
        ("ground 632x384 vs 3 phrases", lambda k: k.max_cosine(universe, phrases)),
        ("dedup 30 tags", lambda k: k.greedy_dedup(grounded, 0.45)),
        ("match 8x6 tags", lambda k: k.max_cosine(side_a, side_b)),
    ]

    lanes = [("pure-python", _kern_py)]
    if _simkern is not None:
        lanes.append(("compiled", _simkern))
    else:
        print("compiled kernels not built; showing the fallback lane only")

    print(f"{'workload':<32}" + "".join(f"{name:>16}" for name, _ in lanes)
          + ("{:>10}".format("speedup") if len(lanes) == 2 else ""))
    for label, work in workloads:
        times = [timeit(lambda k=kernel: work(k), repeats) for _, kernel in lanes]
        row = f"{label:<32}" + "".join(f"{t * 1e6:>13.1f} us" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
