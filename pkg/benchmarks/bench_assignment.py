#!/usr/bin/env python3
"""Benchmark the assignment kernel: compiled backend vs pure Python.

The solver sits inside the scan detector's inner loop, one O(n^3) solve per
Monte-Carlo trial, so this is the package's hot kernel.  Run after
``pip install -e .``:

    python benchmarks/bench_assignment.py
"""

import time

import numpy as np

from dbdetect.assignment import BACKEND, solve_max


def time_backend(name: str, weights, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        solve_max(weights, use_backend=name)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    rng = np.random.default_rng(0)
    print(f"active backend: {BACKEND}")
    header = f"{'n':>5} {'python':>12} {'cython':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for n in (20, 50, 100, 200, 400):
        weights = rng.normal(size=(n, n))
        repeats = max(1, 2000 // n)
        t_py = time_backend("python", weights, repeats)
        if BACKEND == "cython":
            t_cy = time_backend("cython", weights, repeats)
            _, v_py = solve_max(weights, use_backend="python")
            _, v_cy = solve_max(weights, use_backend="cython")
            assert abs(v_py - v_cy) < 1e-9, "backends disagree"
            print(f"{n:>5} {t_py * 1e3:>10.2f}ms {t_cy * 1e3:>10.2f}ms {t_py / t_cy:>8.1f}x")
        else:
            print(f"{n:>5} {t_py * 1e3:>10.2f}ms {'n/a':>12} {'n/a':>9}")


if __name__ == "__main__":
    main()
