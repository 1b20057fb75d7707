"""Benchmark: component Gram assembly, numba JIT vs pure numpy.

The Gram build is the hot kernel of every tuning loop (it reruns for each
candidate bandwidth on each fold). Run:

    python benchmarks/bench_grams.py [--sizes 500,1000,2000] [--d 10]

Setting ADDLSSVM_NUMBA=0 in the environment makes the package itself use
the numpy path; this script times both backends in one process regardless.
"""

import argparse
import time

import numpy as np

from addlssvm import _accel


def time_fn(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="500,1000,2000")
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    rng = np.random.default_rng(args.seed)
    families = np.zeros(args.d, dtype=np.int64)          # all RBF (the expensive case)
    sigmas = np.full(args.d, 0.5)

    if not _accel.HAVE_NUMBA:
        print("numba backend unavailable (ADDLSSVM_NUMBA=0 or numba missing); numpy only")

    print(f"{'N':>6} {'numpy (s)':>12} {'numba (s)':>12} {'speedup':>9}")
    for n in sizes:
        X = rng.random((args.d, n))
        t_np = time_fn(_accel.component_grams_numpy, X, X, families, sigmas)
        if _accel.HAVE_NUMBA:
            _accel.component_grams(X[:, :10], X[:, :10], families, sigmas)  # compile
            t_nb = time_fn(_accel.component_grams, X, X, families, sigmas)
            o_np = _accel.component_grams_numpy(X, X, families, sigmas)[1]
            o_nb = _accel.component_grams(X, X, families, sigmas)[1]
            err = np.max(np.abs(o_np - o_nb)) / (1.0 + np.max(np.abs(o_np)))
            assert err < 1e-12, f"backends disagree: {err:.2e}"
            print(f"{n:>6} {t_np:>12.4f} {t_nb:>12.4f} {t_np / t_nb:>8.2f}x")
        else:
            print(f"{n:>6} {t_np:>12.4f} {'-':>12} {'-':>9}")


if __name__ == "__main__":
    main()
