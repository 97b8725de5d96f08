"""Compare the compiled and pure-Python kernel backends.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

The compiled backend must be importable for the comparison; otherwise only
the pure timings are printed.
"""
import argparse
import time

import numpy as np

from trajprior._kernels import _ref


def load_fast():
    try:
        from trajprior._kernels import _fast
        return _fast
    except ImportError:
        return None


def bench(fn, args_list, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for args in args_list:
            fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=50,
                    help="number of frechet pairs per timing loop")
    ap.add_argument("--length", type=int, default=300,
                    help="points per trajectory for the frechet benchmark")
    ap.add_argument("--segments", type=int, default=2000,
                    help="segments for the traversal benchmark")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    fast = load_fast()

    frechet_args = [
        (rng.normal(0, 20, (args.length, 2)),
         rng.normal(0, 20, (args.length, 2)))
        for _ in range(args.pairs)
    ]
    traverse_args = [
        tuple(rng.uniform(-45, 45, 4)) + (-50.0, -25.0, 0.5, 0.5, 100, 200)
        for _ in range(args.segments)
    ]

    print(f"frechet: {args.pairs} pairs of {args.length}-point trajectories")
    t_ref = bench(_ref.frechet_dp, frechet_args)
    print(f"  python  {t_ref * 1e3:9.1f} ms")
    if fast is not None:
        t_fast = bench(fast.frechet_dp, frechet_args)
        print(f"  cython  {t_fast * 1e3:9.1f} ms   ({t_ref / t_fast:.1f}x)")
        sample = frechet_args[0]
        assert _ref.frechet_dp(*sample) == fast.frechet_dp(*sample)

    print(f"traverse: {args.segments} segments on a 100x200 grid")
    t_ref = bench(_ref.traverse_cells, traverse_args)
    print(f"  python  {t_ref * 1e3:9.1f} ms")
    if fast is not None:
        t_fast = bench(fast.traverse_cells, traverse_args)
        print(f"  cython  {t_fast * 1e3:9.1f} ms   ({t_ref / t_fast:.1f}x)")
        sample = traverse_args[0]
        assert np.array_equal(_ref.traverse_cells(*sample),
                              fast.traverse_cells(*sample))

    if fast is None:
        print("compiled backend not available; skipped comparison")


if __name__ == "__main__":
    main()
