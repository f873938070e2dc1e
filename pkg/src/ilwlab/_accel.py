"""Hot loops with a numba path and a pure-numpy fallback.

Set ``ILWLAB_DISABLE_NUMBA=1`` to force the numpy path.  If numba cannot be
imported the numpy path is used silently.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("ILWLAB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False


def _antidiag_numpy(S, c, d, out):
    nd = d.shape[0]
    for i in range(S.shape[0]):
        out[i : i + nd] += S[i] * (c[i] * d)
    return out


def _osc_numpy(x, t, xi, w, phase, out, chunk=256):
    tp = t * phase
    for k0 in range(0, x.shape[0], chunk):
        xs = x[k0 : k0 + chunk]
        out[k0 : k0 + chunk] = np.exp(1j * (np.outer(xs, xi) + tp)) @ w
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _antidiag_numba(S, c, d, out):  # pragma: no cover - compiled
        ni, nj = S.shape
        for i in range(ni):
            ci = c[i]
            for j in range(nj):
                out[i + j] += S[i, j] * ci * d[j]
        return out

    @njit(cache=True)
    def _osc_numba(x, t, xi, w, phase, out):  # pragma: no cover - compiled
        for k in range(x.shape[0]):
            acc = 0j
            xk = x[k]
            for m in range(xi.shape[0]):
                th = xk * xi[m] + t * phase[m]
                acc += w[m] * complex(np.cos(th), np.sin(th))
            out[k] = acc
        return out


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def antidiag_accumulate(S, c, d, use_numba: bool | None = None):
    """``out[i + j] += S[i, j] c[i] d[j]``; returns an array of length ``len(c) + len(d) - 1``."""
    S = np.ascontiguousarray(S, dtype=complex)
    c = np.ascontiguousarray(c, dtype=complex)
    d = np.ascontiguousarray(d, dtype=complex)
    out = np.zeros(c.shape[0] + d.shape[0] - 1, dtype=complex)
    if S.size == 0:
        return out
    if (HAVE_NUMBA if use_numba is None else use_numba and HAVE_NUMBA):
        return _antidiag_numba(S, c, d, out)
    return _antidiag_numpy(S, c, d, out)


def oscillatory_sum(x, t, xi, w, phase, use_numba: bool | None = None):
    """``sum_m w_m exp(i (x xi_m + t phase_m))`` for every ``x``."""
    x = np.ascontiguousarray(x, dtype=float)
    xi = np.ascontiguousarray(xi, dtype=float)
    w = np.ascontiguousarray(w, dtype=complex)
    phase = np.ascontiguousarray(phase, dtype=float)
    out = np.zeros(x.shape[0], dtype=complex)
    if (HAVE_NUMBA if use_numba is None else use_numba and HAVE_NUMBA):
        return _osc_numba(x, float(t), xi, w, phase, out)
    return _osc_numpy(x, float(t), xi, w, phase, out)
