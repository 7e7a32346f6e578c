"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from lrcrystal import _fallback

try:
    from lrcrystal import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def problem(p, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.01, 1.0, size=(p, p))
    return np.ascontiguousarray(A + A.T)


def cases():
    tri = (1.0, 0.0, 0.5, 0.8660254037844386)
    W36 = problem(36)
    W16 = problem(16, 1)
    start = np.random.default_rng(2).integers(0, 2, size=36).astype(np.int64)
    yield ("shell_sums K=512 alpha=3", lambda k: k.shell_sums(0.5, 0.2, *tri, 3.0, 512, False))
    yield ("descend p=36 hardcore", lambda k: k.descend(W36, start.copy(), 1.5, 0.0, True, 1, False, 1e-12))
    yield ("descend p=36 soft-core", lambda k: k.descend(W36, start.copy(), 0.5, 0.3, False, 3, True, 1e-12))
    yield ("exhaustive p=16 hardcore", lambda k: k.exhaustive_min(W16, 2.0, 0.0, True, 1, -1, 1e-10))
    yield ("exhaustive p=16 half filling", lambda k: k.exhaustive_min(W16, 0.0, 0.0, True, 1, 8, 1e-10))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':32s} {'fallback':>11s} {'compiled':>11s} {'speedup':>8s}")
    for name, run in cases():
        tf = best_of(lambda: run(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:32s} {tf:10.4f}s {'-':>11s} {'-':>8s}")
            continue
        tc = best_of(lambda: run(_kernels), args.repeat)
        print(f"{name:32s} {tf:10.4f}s {tc:10.4f}s {tf / tc:7.1f}x")


if __name__ == "__main__":
    main()
