"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run: python benchmarks/bench_kernels.py [n_windows] [window_length]
The numba path also honors GRAPH2TS_NUMBA=0, in which case only the numpy
timings are reported.
"""

import sys
import time

import numpy as np

from graph2ts import _accel as acc


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm (jit compile / cache load)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    t_len = int(sys.argv[2]) if len(sys.argv) > 2 else 32
    rng = np.random.default_rng(0)
    a = rng.standard_normal((n, t_len))
    b = rng.standard_normal((n, t_len))
    states = rng.integers(1, 11, size=(n, t_len))

    cases = [
        ("min_dist_to_set", (a, b),
         acc._min_dist_to_set_np,
         acc._min_dist_to_set_nb if acc.USING_NUMBA else None),
        ("nn_dist_excl_self", (a,),
         acc._nn_dist_excl_self_np,
         acc._nn_dist_excl_self_nb if acc.USING_NUMBA else None),
        ("medoid_index", (a,),
         acc._medoid_index_np,
         acc._medoid_index_nb if acc.USING_NUMBA else None),
        ("transition_counts", (states, 10),
         acc._transition_counts_np,
         acc._transition_counts_nb if acc.USING_NUMBA else None),
    ]

    print(f"kernel benchmark: {n} windows x {t_len} samples "
          f"(numba {'on' if acc.USING_NUMBA else 'off'})")
    print(f"{'kernel':<20} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, args, np_fn, nb_fn in cases:
        t_np = timeit(np_fn, *args)
        if nb_fn is None:
            print(f"{name:<20} {t_np * 1e3:>8.1f}ms {'-':>10} {'-':>8}")
            continue
        t_nb = timeit(nb_fn, *args)
        print(f"{name:<20} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms "
              f"{t_np / t_nb:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
