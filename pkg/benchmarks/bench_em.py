"""Benchmark the compiled EM kernel against the pure numpy fallback.

Usage: python3 benchmarks/bench_em.py [n] [repeats]
"""

import sys
import time

import numpy as np

from lfrps import Family, LfrpsDist
from lfrps import _emcore_py

try:
    from lfrps import _emcore
except ImportError:
    _emcore = None


def bench(kernel, x, code, reps):
    best = float("inf")
    result = None
    for _ in range(reps):
        t0 = time.perf_counter()
        hist, conv = kernel.em_path(x, code, 1, 1.0 / x.mean(), 1.0 / (x * x).mean(),
                                    0.5, 1e-5, 5000)
        best = min(best, time.perf_counter() - t0)
        result = (hist[-1], hist.shape[0] - 1, conv)
    return best, result


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200
    reps = int(sys.argv[2]) if len(sys.argv) > 2 else 5
    fam = Family.geometric()
    dist = LfrpsDist(0.3, 0.3, 0.2, fam)
    x = dist.sample(n, seed=2024)

    t_py, (est_py, it_py, conv_py) = bench(_emcore_py, x, fam.code, reps)
    print(f"python backend: {t_py * 1e3:9.2f} ms  ({it_py} iterations, converged={conv_py})")
    if _emcore is None:
        print("cython backend: not built")
        return
    t_cy, (est_cy, it_cy, conv_cy) = bench(_emcore, x, fam.code, reps)
    print(f"cython backend: {t_cy * 1e3:9.2f} ms  ({it_cy} iterations, converged={conv_cy})")
    print(f"speedup: {t_py / t_cy:.1f}x")
    print("max estimate difference:", float(np.max(np.abs(est_py - est_cy))))


if __name__ == "__main__":
    main()
