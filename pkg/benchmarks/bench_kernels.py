#!/usr/bin/env python3
"""Benchmark the compiled sorting/crowding kernels against the pure twins.

Usage: python3 benchmarks/bench_kernels.py [--sizes 64,256,1024] [--repeats 5]
"""

import argparse
import random
import statistics
import time

from instructevo.moea import _pure

try:
    from instructevo.moea import _kernels
except ImportError:
    _kernels = None


def make_population(n, rng):
    return [(rng.random(), float(rng.randrange(0, 500)), 1 + 4 * rng.random()) for _ in range(n)]


def time_call(fn, *args, repeats):
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - start)
    return min(samples), statistics.median(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="64,256,1024")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    rng = random.Random(args.seed)

    backends = [("pure", _pure)]
    if _kernels is not None:
        backends.append(("compiled", _kernels))
    else:
        print("compiled kernels unavailable; benchmarking the pure path only")

    header = f"{'kernel':<22}{'n':>6}" + "".join(f"{name + ' (ms)':>16}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for kernel_name in ("fast_nondominated_sort", "crowding_distance"):
        for n in sizes:
            pop = make_population(n, rng)
            # sanity: both backends must agree before we time them
            if len(backends) == 2:
                assert getattr(_pure, kernel_name)(pop) == getattr(_kernels, kernel_name)(pop)
            row = f"{kernel_name:<22}{n:>6}"
            best = {}
            for name, mod in backends:
                t_min, _ = time_call(getattr(mod, kernel_name), pop, repeats=args.repeats)
                best[name] = t_min
                row += f"{t_min * 1000:>16.3f}"
            if len(backends) == 2:
                row += f"{best['pure'] / best['compiled']:>9.1f}x"
            print(row)


if __name__ == "__main__":
    main()
