#!/usr/bin/env python3
"""Benchmark the GF(2) batch kernels: numba JIT vs the numpy fallback.

The kernels decide pair usability (stacked-rank checks) on the Monte Carlo
paths, so both backends are timed on representative sizes.  Results are
bit-identical by construction (randomness is drawn outside the kernels).

Run:  python benchmarks/bench_gf2.py [--pairs 200000]
"""
import argparse
import time

import numpy as np

from twirltomo import _kernels


def bench(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pairs", type=int, default=200000)
    args = ap.parse_args()

    print(f"active backend: {_kernels.BACKEND} "
          f"(set TWIRLTOMO_NO_NUMBA=1 to force numpy)")
    rng = np.random.default_rng(0)
    for n in (2, 3, 4):
        fa = rng.integers(0, 1 << (2 * n), size=(args.pairs, n), dtype=np.uint64)
        fb = rng.integers(0, 1 << (2 * n), size=(args.pairs, n), dtype=np.uint64)
        if _kernels.HAVE_NUMBA:
            _kernels.pairs_independent(fa[:10], fb[:10], 2 * n)  # JIT warmup
            t_fast, out_fast = bench(_kernels.pairs_independent, fa, fb, 2 * n)
        else:
            t_fast, out_fast = None, None
        t_np, out_np = bench(_kernels._pairs_independent_numpy, fa, fb, 2 * n)
        line = f"pairs_independent n={n} M={args.pairs}: numpy {t_np*1e3:8.1f} ms"
        if t_fast is not None:
            assert np.array_equal(out_fast, out_np)
            line += f" | numba {t_fast*1e3:8.1f} ms | speedup {t_np/t_fast:5.1f}x"
        print(line)

    a = rng.integers(0, 2 ** 63, size=args.pairs * 4, dtype=np.uint64)
    t_pc, _ = bench(_kernels.popcount_u64, a)
    print(f"popcount_u64 on {a.size} words: {t_pc*1e3:.1f} ms")


if __name__ == "__main__":
    main()
