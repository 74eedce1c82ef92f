"""Timing table for the conditional-average kernel sums.

Compares the direct O(N*M) evaluation with the sorted-window paths
(numpy, and numba when installed) over a range of ensemble sizes:

    python scripts/bench_estimator.py --m 200 --epsilon 0.01
"""

import argparse
import time

import numpy as np

from abfsim.dynamics import kernel_sums, kernel_sums_naive
from abfsim.kernels import KernelSpec
from abfsim.reference import profile_grid


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="250,1000,4000,16000")
    parser.add_argument("--m", type=int, default=200, help="query nodes")
    parser.add_argument("--epsilon", type=float, default=0.01)
    parser.add_argument("--alpha", type=float, default=0.0)
    parser.add_argument("--period", type=float, default=4.0)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    spec = KernelSpec(epsilon=args.epsilon, alpha=args.alpha,
                      period=args.period)
    grid = profile_grid(args.period, args.m)
    rng = np.random.default_rng(args.seed)
    try:
        import numba  # noqa: F401
        engines = ["numpy", "numba"]
    except ImportError:
        engines = ["numpy"]

    header = ["n", "naive"] + engines
    print("  ".join(f"{h:>10}" for h in header))
    for n in (int(s) for s in args.sizes.split(",")):
        samples = rng.uniform(-args.period / 2, args.period / 2, n)
        values = rng.standard_normal(n)
        row = [f"{n:>10}"]
        row.append(f"{timed(lambda: kernel_sums_naive(grid, samples, values, spec), args.repeat):10.4f}")
        for engine in engines:
            kernel_sums(grid, samples, values, spec, engine=engine)  # warm up
            dt = timed(
                lambda: kernel_sums(grid, samples, values, spec, engine=engine),
                args.repeat,
            )
            row.append(f"{dt:10.4f}")
        print("  ".join(row))


if __name__ == "__main__":
    main()
