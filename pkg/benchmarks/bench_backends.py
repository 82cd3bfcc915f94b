"""Benchmark the numba and pure-numpy eigensolver backends.

The cyclic-Jacobi eigensolver dominates margin evaluation, so this is
the number that decides whether the jit path earns its keep.  Timings
cover single solves, batched solves, and an end-to-end characteristic
computation.

Run:  python benchmarks/bench_backends.py [--sizes 4 8 16] [--batch 2000]
"""

import argparse
import time

import numpy as np

from rieszlab import _accel, riesz, subeq
from rieszlab.linalg import random_symmetric


def time_call(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_eigvals(sizes, batch):
    rows = []
    for n in sizes:
        mats = np.stack([random_symmetric(n, seed) for seed in range(batch)])
        for name, impl in _accel.IMPLEMENTATIONS.items():
            if impl is None:
                rows.append((f"eigvals_batch n={n} m={batch}", name, None))
                continue
            impl["eigvals_batch"](mats[:8])  # warm up / compile
            elapsed = time_call(impl["eigvals_batch"], mats, repeat=3)
            rows.append((f"eigvals_batch n={n} m={batch}", name, elapsed))
        single = mats[0]
        for name, impl in _accel.IMPLEMENTATIONS.items():
            if impl is None:
                rows.append((f"eigvals single n={n} x1000", name, None))
                continue

            def loop(mat=single, fn=impl["eigvals"]):
                for _ in range(1000):
                    fn(mat)

            rows.append((f"eigvals single n={n} x1000", name, time_call(loop, repeat=3)))
    return rows


def bench_characteristic():
    # end to end: a characteristic pair through the active backend
    f = subeq.builtin("sigma-k", 6, k=3)
    riesz.characteristic_pair(f)  # warm up
    return time_call(lambda: riesz.characteristic_pair(f), repeat=3)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16])
    parser.add_argument("--batch", type=int, default=2000)
    args = parser.parse_args()

    print(f"active backend: {_accel.backend_name()}")
    print(f"{'benchmark':<34} {'backend':<8} {'seconds':>10}")
    for label, name, elapsed in bench_eigvals(args.sizes, args.batch):
        shown = "n/a" if elapsed is None else f"{elapsed:10.4f}"
        print(f"{label:<34} {name:<8} {shown:>10}")
    pair_time = bench_characteristic()
    print(f"{'characteristic pair (sigma-k n=6)':<34} {_accel.backend_name():<8} "
          f"{pair_time:10.4f}")


if __name__ == "__main__":
    main()
