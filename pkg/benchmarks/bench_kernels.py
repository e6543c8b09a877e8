"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--sizes 200 2000 20000] [--repeat 5]

Times the sequential dot product, the CSR product and a full
transform-concise solve on the banded Toeplitz matrix under each backend.
Both backends produce bit-identical results; only speed differs.
"""

import argparse
import timeit

import numpy as np

from bismooth import _kernels
from bismooth.history import SolverConfig
from bismooth.linalg import toeplitz_test_matrix
from bismooth.solvers import run_transform_concise


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench(n, repeat):
    A = toeplitz_test_matrix(n)
    v = np.random.default_rng(0).standard_normal(n)
    b = A.apply(np.ones(n))
    cfg = SolverConfig(tol=1e-12, max_iter=1000)
    rows = {}
    for name in _kernels.available_backends():
        with _kernels.use_backend(name):
            _kernels.dot(v, v)
            A.apply(v)
            rows[name] = (
                best_of(lambda: _kernels.dot(v, v), repeat, 200),
                best_of(lambda: A.apply(v), repeat, 200),
                best_of(lambda: run_transform_concise(A, b, None, b, cfg), repeat, 1),
            )
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[200, 2000, 20000])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _kernels.HAS_NUMBA:
        print("numba not installed; timing the numpy backend only")
    print(f"{'n':>7} {'backend':<7} {'dot [us]':>10} {'csr [us]':>10} {'solve [ms]':>11}")
    for n in args.sizes:
        rows = bench(n, args.repeat)
        for name, (t_dot, t_csr, t_solve) in rows.items():
            print(f"{n:>7} {name:<7} {t_dot * 1e6:>10.2f} {t_csr * 1e6:>10.2f} {t_solve * 1e3:>11.2f}")
        if len(rows) == 2:
            ratio = rows["numpy"][2] / rows["numba"][2]
            print(f"{'':>7} solve speedup numba/numpy: {ratio:.2f}x")


if __name__ == "__main__":
    main()
