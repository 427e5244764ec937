"""Compare the numba and numpy kernel paths, then time whole traces.

    python benchmarks/bench_kernels.py [--size N] [--traces T]

The numba path is skipped when numba is missing or PFL_NUMBA=0.
"""
import argparse
import time

import numpy as np

from pfl import _kernels
from pfl.bits import SampleSource, Stream, trial_seeds
from pfl.conditioning import box_muller, gaussian_density, score_reweight


def best_of(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=1_000_000)
    ap.add_argument("--traces", type=int, default=2000)
    args = ap.parse_args()

    keys = np.full(args.size, _kernels.mix64(12345), dtype=np.uint64)
    lo = np.arange(args.size, dtype=np.uint64)
    paths = [False] + ([True] if _kernels.USE_NUMBA else [])
    ref = None
    for use in paths:
        _kernels.words(keys[:8], lo[:8], use_numba=use)  # warm-up / compile
        t_words = best_of(lambda: _kernels.words(keys, lo, use_numba=use))
        t_seeds = best_of(lambda: _kernels.derive_seeds(7, args.size, use_numba=use))
        out = _kernels.words(keys, lo, use_numba=use)
        same = "" if ref is None else f"  identical={bool(np.array_equal(ref, out))}"
        ref = out if ref is None else ref
        name = "numba" if use else "numpy"
        print(f"{name:6s} words {args.size / t_words / 1e6:8.1f} M/s   "
              f"seeds {args.size / t_seeds / 1e6:8.1f} M/s{same}")

    seeds = trial_seeds(1, args.traces)
    t = time.perf_counter()
    for s in seeds:
        box_muller(Stream(SampleSource(s)), 24)
    bm = (time.perf_counter() - t) / args.traces
    scored = score_reweight(box_muller, gaussian_density(1, 1))
    t = time.perf_counter()
    for s in seeds:
        scored(Stream(SampleSource(s)), 24)
    sc = (time.perf_counter() - t) / args.traces
    print(f"box-muller trace      {bm * 1e6:8.1f} us")
    print(f"scored trace          {sc * 1e6:8.1f} us   (10^5 traces ~ {sc * 1e5:.0f} s)")


if __name__ == "__main__":
    main()
