"""Compare the compiled and pure-Python kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3]

Prints the best wall time per kernel and backend, the speed-up, and the
largest difference between the two backends' outputs.
"""

import argparse
import time

import numpy as np

from renewal_ldp import _kernels_py
from renewal_ldp.kernels import compiled_available


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng):
    n = 6001
    z = np.exp(-0.01 * np.arange(n))
    m = np.diff(-np.exp(-0.01 * np.arange(n)))

    def volterra(mod):
        return lambda: mod.volterra_forward(z, 0.0, m)

    nz = 3800
    w = np.exp(-0.5 * (0.01 * np.arange(-800, 801)) ** 2) * 0.01 / np.sqrt(2 * np.pi)
    zz = rng.random(nz)

    def sweep(mod):
        def go():
            Z = zz.copy()
            for _ in range(5):
                mod.gauss_seidel_sweep(Z, zz, w, 800)
            return Z

        return go

    xs = rng.exponential(size=(4096, 64))
    ys = rng.poisson(1.0, size=(4096, 64)).astype(float)

    def scan(mod):
        def go():
            sx = np.zeros(4096)
            sy = np.zeros(4096)
            first = np.empty(4096, dtype=np.int64)
            stop = np.empty(4096, dtype=np.int8)
            y_at = np.empty(4096)
            mod.scan_exceed_batch(xs, ys, sx, sy, 30.0, first, stop, y_at)
            return np.concatenate([sx, sy, first, y_at])

        return go

    return {"volterra n=6001": volterra, "gauss-seidel 5 sweeps": sweep, "scan 4096x64": scan}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if not compiled_available():
        print("compiled extension not built; only the Python backend is available")
    rng = np.random.default_rng(0)
    backends = {"python": _kernels_py}
    if compiled_available():
        from renewal_ldp import _kernels

        backends["cython"] = _kernels
    print(f"{'kernel':<24}{'backend':<10}{'seconds':>12}{'speed-up':>10}{'max |diff|':>14}")
    for name, make in cases(rng).items():
        ref_time, ref = _best(make(_kernels_py), args.repeat)
        print(f"{name:<24}{'python':<10}{ref_time:>12.4f}{1.0:>10.1f}{0.0:>14.2e}")
        if "cython" in backends:
            t, out = _best(make(backends["cython"]), args.repeat)
            diff = float(np.max(np.abs(np.asarray(out) - np.asarray(ref))))
            print(f"{name:<24}{'cython':<10}{t:>12.4f}{ref_time / t:>10.1f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
