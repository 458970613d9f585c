"""Benchmark the compiled solver kernels against the pure-Python fallback.

Times the forward fast-march sweep and the adjoint vjp sweep on square
grids of increasing size, for both backends, and prints the speedups.

    python benchmarks/bench_backends.py --sizes 32 64 128 256 --repeats 5
"""

import argparse
import time

import numpy as np

from diffmarch import _purepy

try:
    from diffmarch import _core
except ImportError:
    _core = None


def time_backend(kernels, nx, ny, h, phi, seeds, u_bar, repeats):
    best_solve = np.inf
    best_vjp = np.inf
    records = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        records = kernels.solve_kernel(nx, ny, h, phi, seeds)
        best_solve = min(best_solve, time.perf_counter() - t0)
        t0 = time.perf_counter()
        kernels.vjp_kernel(nx, ny, h, phi, *records, u_bar)
        best_vjp = min(best_vjp, time.perf_counter() - t0)
    return best_solve, best_vjp, records


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128, 256])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--rng-seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.rng_seed)
    print(f"{'grid':>10} {'python solve':>14} {'python vjp':>12}", end="")
    if _core is not None:
        print(f" {'compiled solve':>15} {'compiled vjp':>13} {'speedup':>9}")
    else:
        print("   (compiled extension not built)")

    for n in args.sizes:
        h = 1.0 / n
        phi = rng.uniform(0.5, 2.0, n * n)
        seeds = np.array([(n // 2) * n + n // 2], dtype=np.int64)
        u_bar = rng.standard_normal(n * n)

        py_solve, py_vjp, py_rec = time_backend(_purepy, n, n, h, phi, seeds, u_bar, args.repeats)
        row = f"{n:>7}^2 {py_solve * 1e3:>12.2f}ms {py_vjp * 1e3:>10.2f}ms"
        if _core is not None:
            c_solve, c_vjp, c_rec = time_backend(_core, n, n, h, phi, seeds, u_bar, args.repeats)
            match = all(np.array_equal(a, b) for a, b in zip(py_rec, c_rec))
            speedup = (py_solve + py_vjp) / (c_solve + c_vjp)
            row += f" {c_solve * 1e3:>13.2f}ms {c_vjp * 1e3:>11.2f}ms {speedup:>8.1f}x"
            if not match:
                row += "  MISMATCH"
        print(row)


if __name__ == "__main__":
    main()
