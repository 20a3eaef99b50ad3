"""Compiled vs pure-numpy kernels on the workloads the package actually runs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 1000000]

Prints the best-of-``repeat`` wall time per backend and the speedup, and
checks that both backends agree.
"""
import argparse
import time

import numpy as np

from ssg import fixtures, kernels
from ssg.geometry import truncated_slice
from ssg.measures import TestFunction, slice_density


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads(n):
    L = fixtures.e1()
    S = truncated_slice(L, 3200)
    rng = np.random.default_rng(0)
    h = rng.standard_normal((n, 1))
    s = rng.chisquare(S.N - S.m - S.k, n)
    chol = np.linalg.cholesky(S.cov_k)
    out = []
    for label, phi in (("cos", TestFunction.cosine([1.0])), ("box", TestFunction.box([2.0], [4.0])),
                       ("bump", TestFunction.bump([3.0], 0.5))):
        out.append((f"mc_block k=1 {label}", "mc_block",
                    (h, s, S.mean_k, chol, S.radius, phi.code, phi.a, phi.b, phi.s)))

    L2 = fixtures.geometric_pair()
    D = slice_density(L2, 60)
    linv = np.ascontiguousarray(np.linalg.inv(np.linalg.cholesky(D.cov_k)))
    x = np.ascontiguousarray(D.mean_k + rng.uniform(-3, 3, size=(n, 2)))
    phi = TestFunction.bump([1.0, 0.0], 0.7)
    out.append(("density_grid k=2 slice bump", "density_grid",
                (x, np.ascontiguousarray(D.mean_k), linv, D.radius**2, D.log_norm_const, D.exponent,
                 phi.code, phi.a, phi.b, phi.s)))
    out.append(("density_grid k=2 gaussian bump", "density_grid",
                (x, np.ascontiguousarray(D.mean_k), linv, 0.0, -2.0, 0.0, phi.code, phi.a, phi.b, phi.s)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=1_000_000)
    args = ap.parse_args()
    if "cython" not in kernels.BACKENDS:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    print(f"{'workload':<34}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for label, fname, fargs in workloads(args.n):
        tp, op = best_of(lambda: getattr(kernels.get_backend("python"), fname)(*fargs), args.repeat)
        tc, oc = best_of(lambda: getattr(kernels.get_backend("cython"), fname)(*fargs), args.repeat)
        if not np.allclose(op, oc, rtol=1e-10, atol=1e-13):
            raise SystemExit(f"backends disagree on {label}")
        print(f"{label:<34}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
