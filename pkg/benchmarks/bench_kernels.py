"""Head-to-head timing of the compiled evaluation kernel vs the numpy fallback.

The package has one hot loop: evaluating monomial-coefficient columns at
many points (``eval_poly``). It dominates two places, with very different
shapes:

* basis synthesis at the quadrature nodes, tall-and-wide (all basis columns
  at every node), hit once per basis build and once per projection table;
* the flow right-hand side, tall-and-thin (10 derivative columns at every
  node), hit four times per RK4 step, every step, every flow.

Run: ``python3 benchmarks/bench_kernels.py [--degree 8] [--repeats 7]``
"""

import argparse
import time

import numpy as np

from crsphere import build_basis
from crsphere import _kernels_np

try:
    from crsphere import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run(degree, repeats):
    basis = build_basis(degree)
    grid = basis.grid
    z1 = np.asarray(grid.z1, dtype=complex)
    z2 = np.asarray(grid.z2, dtype=complex)
    rng = np.random.default_rng(0)

    synth_cols = np.ascontiguousarray(basis.coeffs @ np.eye(basis.size, dtype=complex))
    flow_cols = np.ascontiguousarray(
        rng.standard_normal((basis.exponents.shape[0], 10))
        + 1j * rng.standard_normal((basis.exponents.shape[0], 10)))

    workloads = [
        ("basis synthesis", synth_cols),
        ("flow rhs (10 cols)", flow_cols),
    ]
    impls = [("numpy", _kernels_np.eval_poly)]
    if _kernels is not None:
        impls.append(("cython", _kernels.eval_poly))

    print(f"degree N={degree}: {len(z1)} nodes, {basis.exponents.shape[0]} monomials, "
          f"{basis.size} basis columns; best of {repeats}")
    for name, cols in workloads:
        results = {}
        values = {}
        for impl_name, fn in impls:
            results[impl_name] = best_of(lambda: fn(z1, z2, basis.exponents, cols), repeats)
            values[impl_name] = fn(z1, z2, basis.exponents, cols)
        line = f"  {name:<20}"
        for impl_name in results:
            line += f" {impl_name} {results[impl_name] * 1e3:8.2f} ms"
        if "cython" in results:
            line += f"   speedup x{results['numpy'] / results['cython']:.1f}"
            err = np.max(np.abs(values["cython"] - values["numpy"]))
            line += f"   max diff {err:.1e}"
        print(line)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--degree", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()
    run(args.degree, args.repeats)
