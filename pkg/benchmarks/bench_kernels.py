"""Compare the compiled kernels with the numpy/scipy fallback.

Usage: python3 benchmarks/bench_kernels.py [--model 1] [--repeat 5]

Times the three hot kernels on one sampled instance of a built-in model:
``Abar^T Abar`` products (the power method), the sparse score pass of a
refinement step and the tie-aware argmax.  Prints one line per kernel with
the best-of-``repeat`` time of each backend and the speed-up.
"""

import argparse
import time

import numpy as np

from lsbm import _fallback
from lsbm.gen import GenOptions, generate
from lsbm.harness import builtin_model

try:
    from lsbm import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", type=int, default=1, choices=[1, 2, 3, 4])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--rounds", type=int, default=10, help="gram applications per timing")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    m = builtin_model(args.model)
    sigma, g = generate(m.params, m.n, GenOptions(args.seed, m.sizes))
    n, L, K = g.n, g.L, m.params.K
    print(f"model {args.model}: n={n}, stored labels={g.n_edges}, K={K}")
    if _kernels is None:
        print("compiled extension not available; nothing to compare")
        return

    rng = np.random.default_rng(args.seed)
    cols = (g.csr_labels - 1) * n + g.indices
    x = rng.standard_normal(n * L)
    delta = rng.standard_normal((K, L + 1, K))
    S = np.round(rng.standard_normal((n, K)), 1)
    u = rng.random(n)

    cases = {}
    for name, mod in (("cython", _kernels), ("python", _fallback)):
        op = mod.AbarOperator(g.indptr, cols, n, n * L)
        cases.setdefault("gram", {})[name] = lambda op=op: op.gram(x, args.rounds)
        cases.setdefault("score_pass", {})[name] = (
            lambda mod=mod: mod.score_pass(g.indptr, g.indices, g.csr_labels, sigma, delta))
        cases.setdefault("tie_argmax", {})[name] = lambda mod=mod: mod.tie_argmax(S, u, 1e-12)

    print(f"{'kernel':<12}{'cython [ms]':>14}{'python [ms]':>14}{'speed-up':>10}")
    for kernel, fns in cases.items():
        np.testing.assert_allclose(fns["cython"](), fns["python"](), rtol=1e-10, atol=1e-9)
        tc = best_of(fns["cython"], args.repeat)
        tp = best_of(fns["python"], args.repeat)
        print(f"{kernel:<12}{1e3 * tc:>14.2f}{1e3 * tp:>14.2f}{tp / tc:>10.2f}")


if __name__ == "__main__":
    main()
