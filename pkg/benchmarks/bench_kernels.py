"""Compare the numba and numpy paths of the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both paths are timed in one process through the ``use_numba`` switch; the
first numba call (compilation or cache load) is excluded.  Set
``ILWLAB_DISABLE_NUMBA=1`` to check that the package falls back cleanly.
"""

import argparse
import time

import numpy as np

from ilwlab import _accel


def _best(fn, repeat):
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts)


def cases(rng):
    n = 1500
    S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    d = rng.normal(size=n) + 1j * rng.normal(size=n)
    yield f"antidiag_accumulate {n}x{n}", lambda u: _accel.antidiag_accumulate(S, c, d, use_numba=u)

    x = np.linspace(-200.0, 20.0, 2000)
    xi = np.linspace(-2.0, 2.0, 4000)
    w = rng.normal(size=xi.size) + 0j
    ph = xi**3 / 3.0
    yield f"oscillatory_sum {x.size}x{xi.size}", lambda u: _accel.oscillatory_sum(x, 10.0, xi, w, ph, use_numba=u)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"numba available: {_accel.HAVE_NUMBA}")
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases(rng):
        ref = fn(False)
        t_np = _best(lambda: fn(False), args.repeat)
        if _accel.HAVE_NUMBA:
            out = fn(True)  # compile / load cache
            t_nb = _best(lambda: fn(True), args.repeat)
            diff = float(np.abs(out - ref).max() / np.abs(ref).max())
            print(f"{name:36s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.2f} {diff:10.2e}")
        else:
            print(f"{name:36s} {t_np:10.4f} {'-':>10s} {'-':>8s} {'-':>10s}")


if __name__ == "__main__":
    main()
