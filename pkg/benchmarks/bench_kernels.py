"""Time the numba and numpy paths of the combinatorial kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 8]

The first numba call per kernel includes compilation and is reported
separately as ``first``.
"""

import argparse
import time

import numpy as np

from diraclab import _kernels
from diraclab.algebra import clifford_algebra


def _time(fn, repeat):
    t0 = time.perf_counter()
    fn()
    first = time.perf_counter() - t0
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return first, best


def cases(n, rng):
    A = clifford_algebra(n // 2, n - n // 2)
    d = A.dim
    x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    y = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    S = rng.standard_normal((3, 3, d)) + 0j
    T = rng.standard_normal((3, 3, d)) + 0j
    idx, coef = A.index, A.coef
    return {
        f"clifford_table n={n}": lambda: _kernels.clifford_table(n, n // 2),
        f"exterior_creation n={n}": lambda: [_kernels.exterior_creation(n, k) for k in range(n)],
        f"monomial_product d={d}": lambda: _kernels.monomial_product(x, y, idx, coef),
        f"left_regular d={d}": lambda: _kernels.left_regular(x, idx, coef),
        f"right_regular d={d}": lambda: _kernels.right_regular(x, idx, coef),
        f"module_matmul 3x3 d={d}": lambda: _kernels.module_matmul(S, T, idx, coef),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=8, help="number of Clifford generators")
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    rows = {}
    for b in backends:
        with _kernels.use_backend(b):
            for name, fn in cases(args.n, np.random.default_rng(0)).items():
                rows.setdefault(name, {})[b] = _time(fn, args.repeat)
    print(f"{'kernel':<28}" + "".join(f"{b + ' best':>14}" for b in backends)
          + (f"{'numba first':>14}{'speedup':>10}" if "numba" in backends else ""))
    for name, r in rows.items():
        line = f"{name:<28}" + "".join(f"{r[b][1] * 1e3:>12.3f}ms" for b in backends)
        if "numba" in r:
            line += f"{r['numba'][0] * 1e3:>12.1f}ms{r['numpy'][1] / r['numba'][1]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
