"""Compiled core against the numpy fallback.

    python3 benchmarks/bench_core.py [--repeat 5]

Times the two hot kernels (Ryser permanent, rapidity residual/Jacobian) on
random inputs of growing size and checks that both backends agree.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from rgbethe import _pyfallback

try:
    from rgbethe import _core
except ImportError:
    _core = None


def _args(rng, n, m):
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    lev = np.sort(rng.uniform(0.5, 5.0, m))
    w = np.full(m, 0.5)
    # hyperbolic-type coefficients
    return (x, lev, w, 1.0 + 0j, 0.3 + 0j, 0j, 1.0, 0.0, 0.0, 1.0)


def bench(repeat: int):
    rng = np.random.default_rng(2024)
    rows = []
    for n in (4, 6, 8, 10, 12):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        t_py = min(timeit.repeat(lambda: _pyfallback.permanent(a), number=1, repeat=repeat))
        if _core is not None:
            t_c = min(timeit.repeat(lambda: _core.permanent(a), number=1, repeat=repeat))
            diff = abs(_core.permanent(a) - _pyfallback.permanent(a)) / abs(_pyfallback.permanent(a))
        else:
            t_c, diff = float("nan"), float("nan")
        rows.append(("permanent", n, t_py, t_c, diff))
    for n, m in ((6, 12), (20, 40), (60, 120)):
        args = _args(rng, n, m)
        t_py = min(timeit.repeat(lambda: _pyfallback.rg_residual_jacobian(*args), number=20, repeat=repeat)) / 20
        if _core is not None:
            t_c = min(timeit.repeat(lambda: _core.rg_residual_jacobian(*args), number=20, repeat=repeat)) / 20
            Fp, Jp = _pyfallback.rg_residual_jacobian(*args)
            Fc, Jc = _core.rg_residual_jacobian(*args)
            diff = max(np.abs(Fp - Fc).max() / np.abs(Fp).max(), np.abs(Jp - Jc).max() / np.abs(Jp).max())
        else:
            t_c, diff = float("nan"), float("nan")
        rows.append(("rg_residual_jacobian", n, t_py, t_c, diff))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':<22}{'size':>6}{'fallback [s]':>15}{'compiled [s]':>15}{'speedup':>10}{'rel diff':>11}")
    for name, n, tp, tc, d in bench(args.repeat):
        print(f"{name:<22}{n:>6}{tp:>15.3e}{tc:>15.3e}{tp / tc:>10.1f}{d:>11.1e}")


if __name__ == "__main__":
    main()
