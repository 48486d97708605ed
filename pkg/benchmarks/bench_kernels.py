#!/usr/bin/env python3
"""Benchmark the compiled pointwise kernels against the numpy fallback.

Times the three fused kernels on solver-sized arrays and a complete
right-hand-side evaluation under each backend. Run from the repository root:

    python benchmarks/bench_kernels.py [--sizes 32 64]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from hismhd import _kernels_py
from hismhd.initdata import SimParams

try:
    from hismhd import _kernels_cy
except ImportError:
    _kernels_cy = None


def _time(fn, reps=20):
    fn()
    start = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - start) / reps * 1e3


def bench_kernels(n):
    rng = np.random.default_rng(0)
    npts = n**3
    a = rng.standard_normal((3, npts))
    b = rng.standard_normal((3, npts))
    grad = rng.standard_normal((3, 3, npts))
    spec = rng.standard_normal((3, npts)) + 1j * rng.standard_normal((3, npts))
    weight = rng.standard_normal(npts)
    out = np.empty_like(a)

    cases = [
        ("cross3", lambda mod: mod.cross3(a, b, out)),
        ("dot_grad3", lambda mod: mod.dot_grad3(a, grad, out)),
        ("mul_inplace", lambda mod: mod.mul_inplace(spec, weight)),
    ]
    rows = []
    for name, call in cases:
        t_py = _time(lambda: call(_kernels_py))
        if _kernels_cy is not None:
            t_cy = _time(lambda: call(_kernels_cy))
            rows.append((name, n, t_py, t_cy, t_py / t_cy))
        else:
            rows.append((name, n, t_py, float("nan"), float("nan")))
    return rows


def bench_rhs(n, pure):
    """Full tendency evaluation in a subprocess pinned to one backend."""
    code = (
        "import time, numpy as np\n"
        "from hismhd import spectral, dynamics, kernels\n"
        "from hismhd.initdata import SimParams\n"
        f"g = spectral.make_grid({n}, 2 * np.pi)\n"
        "p = SimParams(sigma=0.5, kappa=0.1, m0=1.0, delta=0.25)\n"
        f"st = dynamics.random_state(g, 1, 1.0)\n"
        "uh, bh = spectral.halve(g, st.u), spectral.halve(g, st.b)\n"
        "dynamics.rhs_half(g, uh, bh, p)\n"
        "t0 = time.perf_counter()\n"
        "for _ in range(5): dynamics.rhs_half(g, uh, bh, p)\n"
        "print(kernels.BACKEND, (time.perf_counter() - t0) / 5 * 1e3)\n"
    )
    env = dict(os.environ)
    if pure:
        env["HISMHD_PURE"] = "1"
    else:
        env.pop("HISMHD_PURE", None)
    proc = subprocess.run([sys.executable, "-c", code], env=env,
                          capture_output=True, text=True, check=True)
    backend, ms = proc.stdout.split()
    return backend, float(ms)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[32, 64])
    args = parser.parse_args()

    if _kernels_cy is None:
        print("compiled extension not available; timing the fallback only\n")

    print(f"{'kernel':<12} {'n':>4} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for n in args.sizes:
        for name, size, t_py, t_cy, speedup in bench_kernels(n):
            print(f"{name:<12} {size:>4} {t_py:>10.3f} {t_cy:>10.3f} {speedup:>7.2f}x")

    print(f"\n{'full tendency':<17} {'n':>4} {'backend':>8} {'ms':>10}")
    for n in args.sizes:
        for pure in (True, False):
            backend, ms = bench_rhs(n, pure)
            print(f"{'rhs_half':<17} {n:>4} {backend:>8} {ms:>10.1f}")


if __name__ == "__main__":
    main()
