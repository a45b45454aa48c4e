"""Time the compiled loop kernels against their pure-numpy counterparts.

    python3 benchmarks/bench_kernels.py [--quick] [--repeat N]

Without numba installed the "loop" column runs as plain Python, which is
only useful for checking that both paths agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from confacq import kernels
from confacq._accel import HAS_NUMBA


def best_of(fn, repeat):
    fn()  # warm-up (also triggers compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(quick: bool):
    rng = np.random.default_rng(0)
    n_pool, n_train, d = (60, 40, 8) if quick else (550, 300, 26)
    Z, P, w = rng.normal(size=(n_pool, d)), rng.normal(size=(n_train, d)), np.ones(n_train)
    yield "rbf_row_sums", (lambda: kernels.rbf_row_sums_loop(Z, P, w, 0.05),
                           lambda: kernels.rbf_row_sums_numpy(Z, P, w, 0.05))

    n, depth = (80, 4) if quick else (560, 8)
    X = rng.normal(size=(n, d))
    y = (X[:, 0] + rng.normal(size=n) > 0).astype(np.float64)
    boot = rng.integers(0, n, n)
    keys = rng.random((kernels.tree_capacity(depth, n), d))
    mf = int(np.sqrt(d))
    yield "build_tree", (lambda: kernels.build_tree_loop(X, y, boot, keys, depth, mf, 1),
                         lambda: kernels.build_tree_numpy(X, y, boot, keys, depth, mf, 1))

    n_trees = 5 if quick else 100
    trees = [kernels.build_tree_loop(X, y, rng.integers(0, n, n), keys, depth, mf, 1) for _ in range(n_trees)]
    cap = max(t[-1] for t in trees)
    stacked = [np.stack([np.resize(t[i][:t[-1]], cap) for t in trees]) for i in range(5)]
    yield "forest_apply", (lambda: kernels.forest_apply_loop(*stacked, X),
                           lambda: kernels.forest_apply_numpy(*stacked, X))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="tiny inputs, for smoke tests")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    label = "numba" if HAS_NUMBA else "python loop"
    print(f"{'kernel':<14}{label:>14}{'numpy':>14}{'speed-up':>10}")
    rows = []
    for name, (loop_fn, np_fn) in cases(args.quick):
        t_loop, t_np = best_of(loop_fn, args.repeat), best_of(np_fn, args.repeat)
        rows.append((name, t_loop, t_np))
        print(f"{name:<14}{t_loop * 1e3:>12.2f}ms{t_np * 1e3:>12.2f}ms{t_np / t_loop:>9.1f}x")
    return rows


if __name__ == "__main__":
    main()
