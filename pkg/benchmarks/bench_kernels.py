"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--sizes 16,64,256] [--repeat 5]

Prints one line per (kernel, size, backend) with the best time per call
and the speedup of the compiled backend. Results of both backends are
checked against each other before timing.
"""

import argparse
import sys
import timeit

import numpy as np

from dtwmean import kernels
from dtwmean.warping import GlobalConstraint, column_bounds


def _cases(n, rng):
    s, t = rng.normal(size=n), rng.normal(size=n)
    lo, hi = column_bounds(GlobalConstraint.none(), n, n)
    vals = rng.normal(size=n)
    return {
        "dtw_matrix": lambda b: kernels.dtw_matrix(s, t, lo, hi, backend=b),
        "interval_max": lambda b: kernels.interval_max(vals, 0, n - 1, 0.1, backend=b),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,64,256")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    found = kernels.backends()
    if "cython" not in found:
        print("compiled backend not built; only timing the Python fallback", file=sys.stderr)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'n':>6}{'backend':>9}{'sec/call':>12}{'speedup':>9}")
    for n in map(int, args.sizes.split(",")):
        for name, fn in _cases(n, rng).items():
            ref = fn("python")
            times = {}
            for b in found:
                np.testing.assert_allclose(fn(b), ref, rtol=1e-12)
                number = max(1, int(2e5 // (n * n))) if b == "python" else max(10, int(2e7 // (n * n)))
                best = min(timeit.repeat(lambda: fn(b), number=number, repeat=args.repeat)) / number
                times[b] = best
            for b, sec in times.items():
                speed = times["python"] / sec
                print(f"{name:<14}{n:>6}{b:>9}{sec:>12.3e}{speed:>8.1f}x")


if __name__ == "__main__":
    main()
