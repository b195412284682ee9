"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-N wall times per kernel and the speedup. Both backends are
imported directly, independent of DTCSIM_PURE_PYTHON.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from dtcsim._core import _fallback

try:
    from dtcsim._core import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def rk4_case(mod, seeds=64, periods=20, steps=1000):
    rng = np.random.default_rng(0)
    v = rng.normal(size=(seeds, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    X, Y, Z = (np.ascontiguousarray(v[:, i]) for i in range(3))
    out = np.empty((seeds, periods + 1, 3))
    h = (math.pi + 0.1) / 1.0

    def run():
        mod.rk4_bloch(X, Y, Z, 0.0, 1.0 / steps, periods * steps, steps, h, 1.0, 0.05,
                      2 * math.pi, False, out)
    return run


def svd_case(mod, chi, gates=200):
    rng = np.random.default_rng(1)
    Bl = rng.normal(size=(chi, 2, chi)) + 1j * rng.normal(size=(chi, 2, chi))
    Br = rng.normal(size=(chi, 2, chi)) + 1j * rng.normal(size=(chi, 2, chi))
    S = np.sort(rng.random(chi))[::-1]
    S /= np.linalg.norm(S)
    H = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    w, V = np.linalg.eigh(H + H.conj().T)
    U = (V * np.exp(-0.01j * w)) @ V.conj().T

    def run():
        for _ in range(gates):
            mod.two_site_update(Bl, Br, S, U, chi, 1e-14)
    return run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not available; only the fallback can run")
    cases = [("rk4_bloch 64 seeds x 20 periods", rk4_case)]
    cases += [(f"two_site_update chi={chi} x200", lambda m, c=chi: svd_case(m, c))
              for chi in (4, 16, 32)]
    print(f"{'kernel':36s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s}")
    for name, make in cases:
        t_py = best_of(make(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:36s} {t_py:11.4f} {'-':>13s} {'-':>8s}")
            continue
        t_c = best_of(make(_kernels), args.repeat)
        print(f"{name:36s} {t_py:11.4f} {t_c:13.4f} {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
