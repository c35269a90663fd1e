"""Timing comparison of the numba kernels against the numpy fallbacks.

Run as ``python3 benchmarks/bench_kernels.py``.  Needs numba importable
(the compiled path is skipped otherwise) and prints a small table plus a
statistical cross-check that both backends target the same distributions.
"""

import time

import numpy as np

from metabandit import kernels


def _time(fn, *args, repeat=5):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_gamma_chain(n_obs, d, n_iter):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n_obs, d))
    a_cnt = rng.integers(0, 20, size=n_obs).astype(float)
    b_cnt = rng.integers(0, 20, size=n_obs).astype(float)
    args = (x, a_cnt, b_cnt, 4.0, False, False, np.zeros(d), np.eye(d),
            np.zeros(d), 0.05, 0.3, n_iter // 2, True, n_iter,
            max(n_iter // 2, 1))
    rows = []
    if kernels.NUMBA_ENABLED:
        kernels.gamma_chain_jit(*args, 1)  # compile outside the timing
        t_jit, (draws_jit, _, _, _) = _time(kernels.gamma_chain_jit, *args, 11)
        rows.append(("numba", t_jit, draws_jit.mean(axis=0)))
    t_py, (draws_py, _, _, _) = _time(kernels.gamma_chain_py, *args, 11,
                                      repeat=2)
    rows.append(("numpy", t_py, draws_py.mean(axis=0)))
    print(f"\ncoefficient chain: {n_obs} observed item(s), d={d}, "
          f"{n_iter} iterations")
    for name, secs, mean in rows:
        print(f"  {name:6s} {secs * 1e3:9.1f} ms   posterior mean[0] "
              f"{mean[0]:+.3f}")
    if len(rows) == 2:
        print(f"  speedup {rows[1][1] / rows[0][1]:.1f}x")
        gap = np.abs(rows[0][2] - rows[1][2]).max()
        print(f"  max |mean difference| {gap:.3f} (independent chains)")


def bench_mnl_epoch():
    v = np.linspace(0.2, 0.9, 8)
    n_epochs = 20_000

    def run(fn):
        total = 0
        for e in range(n_epochs):
            counts, rounds, _ = fn(v, 1_000_000, e)
            total += rounds
        return total

    rows = []
    if kernels.NUMBA_ENABLED:
        kernels.mnl_epoch_jit(v, 10, 0)
        t_jit, total_jit = _time(run, kernels.mnl_epoch_jit, repeat=3)
        rows.append(("numba", t_jit, total_jit))
    t_py, total_py = _time(run, kernels.mnl_epoch_py, repeat=1)
    rows.append(("numpy", t_py, total_py))
    print(f"\npurchase epochs: |assortment|=8, {n_epochs} epochs")
    for name, secs, total in rows:
        print(f"  {name:6s} {secs * 1e3:9.1f} ms   mean epoch length "
              f"{total / n_epochs:.2f}")
    if len(rows) == 2:
        print(f"  speedup {rows[1][1] / rows[0][1]:.1f}x")


if __name__ == "__main__":
    print(f"active backend: {kernels.BACKEND}")
    bench_gamma_chain(n_obs=400, d=5, n_iter=1000)
    bench_gamma_chain(n_obs=1, d=1, n_iter=50_000)
    bench_mnl_epoch()
