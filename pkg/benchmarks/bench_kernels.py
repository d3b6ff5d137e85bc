"""Benchmark the njit kernels against their pure-numpy fallbacks.

Run directly:

    python benchmarks/bench_kernels.py [--quick]

Timings exclude JIT compilation (one warm-up call per kernel).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tailtree import _kernels_numba, _kernels_numpy
from tailtree.simulate import GAMMA3, hr_anchor_parameters
from tailtree.study import tree_margin_model
from tailtree.treemodel import _path_tensor, draw_increments


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kendall(n, d, rng):
    x = rng.standard_normal((n, d))
    _kernels_numba.kendall_tau_matrix(x[:32])  # compile
    t_nb = timeit(lambda: _kernels_numba.kendall_tau_matrix(x))
    t_np = timeit(lambda: _kernels_numpy.kendall_tau_matrix(x))
    return f"kendall_tau n={n} d={d}", t_nb, t_np


def bench_stdf_mc(n_mc, rng):
    from tailtree.graph import Tree

    tree = Tree(8, ((1, 2), (2, 3), (2, 4), (4, 5), (1, 6), (6, 7), (7, 8)))
    gamma = np.zeros((8, 8))
    for a in range(8):
        for b in range(8):
            gamma[a, b] = 0.0 if a == b else 1.0 + abs(a - b) * 0.3
    model = tree_margin_model("hr", gamma, tree)
    draws = np.ascontiguousarray(draw_increments(model, n_mc, rng))
    y = rng.uniform(0.2, 2.0, size=8)
    paths, plens = _path_tensor(model, list(range(1, 9)))
    _kernels_numba.stdf_mc_values(draws[:128], y, paths, plens)  # compile
    t_nb = timeit(lambda: _kernels_numba.stdf_mc_values(draws, y, paths, plens))
    t_np = timeit(lambda: _kernels_numpy.stdf_mc_values(draws, y, paths, plens))
    return f"stdf_mc n_mc={n_mc} d=8", t_nb, t_np


def bench_hr_sampler(n):
    means, chols = hr_anchor_parameters(GAMMA3)
    _kernels_numba.hr_sample_rows(16, 10, means, chols, 0)  # compile
    t_nb = timeit(lambda: _kernels_numba.hr_sample_rows(n, 10, means, chols, 1))
    t_np = timeit(lambda: _kernels_numpy.hr_sample_rows(n, 10, means, chols, 1))
    return f"hr_sample n={n} d=10", t_nb, t_np


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    rows = [
        bench_kendall(400 if args.quick else 2000, 10, rng),
        bench_stdf_mc(20_000 if args.quick else 200_000, rng),
        bench_hr_sampler(2_000 if args.quick else 20_000),
    ]
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name, t_nb, t_np in rows:
        print(f"{name:<{width}}  {t_nb * 1e3:>8.1f}ms  {t_np * 1e3:>8.1f}ms  {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
