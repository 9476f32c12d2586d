#!/usr/bin/env python3
"""Benchmark the compiled solver kernel against the numpy fallback.

Runs identical solves through both backends on representative problem
sizes (single snapshot and 50 snapshots on the half-degree grid) and
reports per-iteration cost and speedup. BLAS threading is pinned to one
thread, matching how the solver runs in production.

Usage: python benchmarks/bench_solver.py [--repeats 5]
"""

import argparse
import time

import numpy as np
from threadpoolctl import threadpool_limits

from sparsedoa import AngularGrid, ArraySpec, SourceScenario, build_sensing_matrix, synthesize
from sparsedoa._kernels import _fista_py
from sparsedoa.solver import row_norms

try:
    from sparsedoa._kernels import _fista as compiled
except ImportError:
    compiled = None


CASES = [
    # (M, grid step deg, L, snr_db, mu as fraction of activation threshold)
    (20, 0.5, 1, 20.0, 0.30),
    (20, 0.5, 1, 0.0, 0.30),
    (20, 0.5, 50, 10.0, 0.30),
    (8, 1.0, 5, 10.0, 0.50),
]


def make_instance(M, step, L, snr_db):
    array = ArraySpec(M)
    A = build_sensing_matrix(AngularGrid.from_range(-90, 90, step), array)
    scenario = SourceScenario.from_db([2.0, 75.0], [22.0, 20.0])
    snaps, _ = synthesize(scenario, array, L, snr_db, seed=1234)
    return A, snaps.data


def time_backend(fn, A, Y, mu, repeats):
    X0 = np.zeros((A.shape[1], Y.shape[1]), np.complex128)
    args = (A.entries, Y, mu, A.lipschitz, X0, 1e-9, 20000, 500, 5e-4, 0.05)
    best = float("inf")
    iters = obj = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        _, obj, iters, _ = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, iters, obj


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if compiled is None:
        print("compiled kernel not built; benchmarking the numpy backend only")

    header = f"{'case':>24} {'iters':>6} {'numpy':>12} {'compiled':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    with threadpool_limits(limits=1, user_api="blas"):
        for M, step, L, snr, frac in CASES:
            A, Y = make_instance(M, step, L, snr)
            mu = frac * float(row_norms(2.0 * (A.entries.conj().T @ Y)).max())
            t_py, it_py, obj_py = time_backend(
                _fista_py.fista_mmv, A, Y, mu, args.repeats
            )
            label = f"M={M} N={A.shape[1]} L={L} snr={snr:g}"
            if compiled is None:
                print(f"{label:>24} {it_py:>6} {t_py / it_py * 1e6:>9.1f} us/it"
                      f" {'-':>12} {'-':>8}")
                continue
            t_c, it_c, obj_c = time_backend(
                compiled.fista_mmv, A, Y, mu, args.repeats
            )
            assert it_c == it_py, "backends diverged in iteration count"
            assert abs(obj_c - obj_py) <= 1e-9 * obj_py, "backends diverged"
            print(
                f"{label:>24} {it_c:>6} {t_py / it_py * 1e6:>9.1f} us/it "
                f"{t_c / it_c * 1e6:>9.1f} us/it {t_py / t_c:>7.2f}x"
            )


if __name__ == "__main__":
    main()
