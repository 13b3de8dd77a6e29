#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the panel log-likelihood, one unit sweep, one factor sweep, and a
full fit at a few panel sizes. Run from the repository root:

    python benchmarks/bench_backends.py
"""

import time

import numpy as np

from ifepanel import FitConfig, PROBIT, PanelData, fit
from ifepanel import _backend_numpy
from ifepanel.simulation import DgpSpec, gen_dgp

try:
    from ifepanel import _backend_numba

    BACKENDS = [("numba", _backend_numba), ("numpy", _backend_numpy)]
except ImportError:  # pragma: no cover
    BACKENDS = [("numpy", _backend_numpy)]

LARGS = (0, 0.0, 1.0, -30.0, 30.0)
NARGS = (50, 1e-8, 30)


def _time(fn, repeats=5):
    fn()  # warm-up / JIT
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(n, t, d):
    spec = DgpSpec(case=1, dgp=1, n_units=n, n_periods=t, num_factors=d, seed=0)
    data, truth = gen_dgp(spec)
    theta0 = np.zeros((n, data.n_regressors + d))
    rows = {}
    for name, bk in BACKENDS:
        ll = _time(
            lambda: bk.panel_loglik(
                data.y, data.x, truth.slopes, truth.loadings, truth.factors, *LARGS
            )
        )
        us = _time(
            lambda: bk.unit_sweep(data.y, data.x, truth.factors, theta0, *LARGS, *NARGS)
        )
        fs = _time(
            lambda: bk.factor_sweep(
                data.y, data.x, truth.slopes, truth.loadings, truth.factors, *LARGS, *NARGS
            )
        )
        rows[name] = (ll, us, fs)
    return rows


def bench_fit(n, t, d):
    spec = DgpSpec(case=1, dgp=1, n_units=n, n_periods=t, num_factors=d, seed=0)
    data, _ = gen_dgp(spec)
    cfg = FitConfig(num_factors=d, n_starts=1, rng_seed=0)
    import ifepanel.kernels as kernels

    saved = (kernels.panel_loglik, kernels.unit_sweep, kernels.factor_sweep, kernels.newton)
    rows = {}
    try:
        for name, bk in BACKENDS:
            kernels.panel_loglik = bk.panel_loglik
            kernels.unit_sweep = bk.unit_sweep
            kernels.factor_sweep = bk.factor_sweep
            kernels.newton = bk.newton
            rows[name] = _time(lambda: fit(data, PROBIT, cfg), repeats=2)
    finally:
        kernels.panel_loglik, kernels.unit_sweep, kernels.factor_sweep, kernels.newton = saved
    return rows


def main():
    print(f"{'size':<16}{'kernel':<14}" + "".join(f"{n:>12}" for n, _ in BACKENDS) + f"{'speedup':>10}")
    for n, t, d in ((30, 40, 1), (50, 50, 2), (100, 100, 2)):
        rows = bench_kernels(n, t, d)
        for idx, label in enumerate(("panel_loglik", "unit_sweep", "factor_sweep")):
            times = [rows[name][idx] for name, _ in BACKENDS]
            speed = times[-1] / times[0] if len(times) > 1 else float("nan")
            print(
                f"{f'{n}x{t} d={d}':<16}{label:<14}"
                + "".join(f"{v * 1e3:>10.2f}ms" for v in times)
                + f"{speed:>9.1f}x"
            )
        if n * t <= 2600:  # full fits on the numpy path get slow beyond this
            fits = bench_fit(n, t, d)
            times = [fits[name] for name, _ in BACKENDS]
            speed = times[-1] / times[0] if len(times) > 1 else float("nan")
            print(
                f"{f'{n}x{t} d={d}':<16}{'full fit':<14}"
                + "".join(f"{v * 1e3:>10.2f}ms" for v in times)
                + f"{speed:>9.1f}x"
            )


if __name__ == "__main__":
    main()
