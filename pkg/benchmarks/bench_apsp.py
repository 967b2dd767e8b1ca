"""Compare the compiled shortest-path kernels with the numpy fallback.

    python benchmarks/bench_apsp.py [--sizes 16 64 256] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from tbm import _apsp_py
from tbm.apsp import INF

try:
    from tbm import _apsp as _apsp_c
except ImportError:
    _apsp_c = None


def random_closed(n, seed=0):
    rng = np.random.default_rng(seed)
    D = np.full((n, n), INF, dtype=np.int64)
    np.fill_diagonal(D, 0)
    mask = rng.random((n, n)) < 4.0 / n
    D[mask] = rng.integers(0, 100, mask.sum())
    np.fill_diagonal(D, 0)
    return D


def bench_closure(impl, n, repeat):
    base = random_closed(n)

    def once():
        impl.floyd_warshall(base.copy(), n)

    return min(timeit.repeat(once, number=1, repeat=repeat))


def bench_relax(impl, n, repeat, edges=50):
    base = random_closed(n)
    _apsp_py.floyd_warshall(base, n)
    rng = np.random.default_rng(1)
    picks = [(int(a), int(b), int(w)) for a, b, w in
             zip(rng.integers(0, n, edges), rng.integers(0, n, edges), rng.integers(50, 200, edges))]

    def once():
        D = base.copy()
        for a, b, w in picks:
            impl.relax_edge(D, n, a, b, w)

    return min(timeit.repeat(once, number=1, repeat=repeat)) / edges


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 64, 256])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    impls = [("numpy", _apsp_py)] + ([("cython", _apsp_c)] if _apsp_c else [])
    if _apsp_c is None:
        print("compiled extension not built; timing the numpy fallback only")
    print(f"{'kernel':<14}{'n':>6}" + "".join(f"{name:>14}" for name, _ in impls)
          + ("     speedup" if len(impls) == 2 else ""))
    for label, fn in (("closure", bench_closure), ("relax (1 edge)", bench_relax)):
        for n in args.sizes:
            times = [fn(impl, n, args.repeat) for _, impl in impls]
            row = f"{label:<14}{n:>6}" + "".join(f"{t * 1e3:>12.3f}ms" for t in times)
            if len(times) == 2:
                row += f"{times[0] / times[1]:>11.1f}x"
            print(row)


if __name__ == "__main__":
    main()
