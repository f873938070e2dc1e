"""Periodic spectral grid, fields, multipliers, projectors and norms.

A field on ``[x_min, x_min + L)`` is stored by its samples; its Fourier
series coefficients are ``c_m = fft(values)[m] / n`` on the lattice
``xi_m = 2 pi m / L``.  Multipliers act as ``c_m -> m(xi_m) c_m``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _accel
from . import symbols as S


class AliasingError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    L: float
    n: int
    x_min: float | None = None

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"period must be positive, got {self.L}")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 16, got {self.n}")
        if self.x_min is None:
            object.__setattr__(self, "x_min", -self.L / 2.0)

    @property
    def dx(self) -> float:
        return self.L / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @cached_property
    def xi(self) -> np.ndarray:
        """Lattice frequencies in fft order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def m(self) -> np.ndarray:
        return np.rint(self.xi * self.L / (2.0 * np.pi)).astype(int)

    @property
    def xi_min(self) -> float:
        return 2.0 * np.pi / self.L

    @property
    def xi_max(self) -> float:
        return np.pi * self.n / self.L

    def __hash__(self):
        return hash((self.L, self.n, self.x_min))


class Field:
    """Immutable samples on a grid (real or complex)."""

    __slots__ = ("grid", "values")
    __array_ufunc__ = None  # numpy scalars and arrays defer to Field arithmetic

    def __init__(self, grid: GridSpec, values):
        v = np.array(values, copy=True)
        if v.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if np.iscomplexobj(v):
            v = v.astype(complex)
        else:
            v = v.astype(float)
        v.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", v)

    def __setattr__(self, *a):
        raise AttributeError("Field is immutable")

    @classmethod
    def from_function(cls, grid: GridSpec, fn):
        return cls(grid, fn(grid.x))

    @classmethod
    def from_spectrum(cls, grid: GridSpec, c, real: bool = False):
        v = np.fft.ifft(np.asarray(c) * grid.n)
        return cls(grid, v.real if real else v)

    @classmethod
    def zeros(cls, grid: GridSpec):
        return cls(grid, np.zeros(grid.n))

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def spectrum(self) -> np.ndarray:
        """Fourier series coefficients in fft order (a copy)."""
        return np.fft.fft(self.values) / self.grid.n

    @property
    def real(self):
        return Field(self.grid, self.values.real)

    @property
    def imag(self):
        return Field(self.grid, np.imag(self.values))

    def mean(self):
        return self.values.mean()

    def _coerce(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, o):
        return Field(self.grid, self.values + self._coerce(o))

    __radd__ = __add__

    def __sub__(self, o):
        return Field(self.grid, self.values - self._coerce(o))

    def __rsub__(self, o):
        return Field(self.grid, self._coerce(o) - self.values)

    def __mul__(self, o):
        return Field(self.grid, self.values * self._coerce(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        return Field(self.grid, self.values / self._coerce(o))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __repr__(self):
        kind = "real" if self.is_real else "complex"
        return f"Field({kind}, L={self.grid.L}, n={self.grid.n})"

    # serialization -------------------------------------------------------

    def _header(self):
        g = self.grid
        return f"L={g.L!r} n_points={g.n} x_min={g.x_min!r} dtype={'real' if self.is_real else 'complex'}"

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"# {self._header()}\n")
            if self.is_real:
                fh.write("x,value\n")
                np.savetxt(fh, np.column_stack([self.grid.x, self.values]), delimiter=",", fmt="%.17g")
            else:
                fh.write("x,value_re,value_im\n")
                rows = np.column_stack([self.grid.x, self.values.real, self.values.imag])
                np.savetxt(fh, rows, delimiter=",", fmt="%.17g")

    def to_binary(self, path):
        with open(path, "wb") as fh:
            fh.write((self._header() + "\n").encode())
            dt = "<f8" if self.is_real else "<c16"
            fh.write(self.values.astype(dt).tobytes())

    @staticmethod
    def _parse_header(line):
        kv = dict(tok.split("=", 1) for tok in line.strip().lstrip("#").split())
        grid = GridSpec(float(kv["L"]), int(kv["n_points"]), float(kv["x_min"]))
        return grid, kv.get("dtype", "real")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            grid, dtype = cls._parse_header(fh.readline())
            data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
        vals = data[:, 1] if dtype == "real" else data[:, 1] + 1j * data[:, 2]
        return cls(grid, vals)

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as fh:
            grid, dtype = cls._parse_header(fh.readline().decode())
            raw = fh.read()
        return cls(grid, np.frombuffer(raw, dtype="<f8" if dtype == "real" else "<c16"))


def _as_field(f):
    if not isinstance(f, Field):
        raise TypeError(f"expected Field, got {type(f).__name__}")
    return f


# ---------------------------------------------------------------------------
# multipliers


def symbol_on_lattice(grid: GridSpec, m, at_zero=None) -> np.ndarray:
    """Evaluate a multiplier on the lattice (fft order)."""
    xi = grid.xi
    if callable(m):
        vals = np.zeros(grid.n, dtype=complex)
        nz = xi != 0
        with np.errstate(all="ignore"):
            vals[nz] = m(xi[nz])
            vals[~nz] = m(np.zeros(1))[0] if at_zero is None else at_zero
    else:
        vals = np.broadcast_to(np.asarray(m, dtype=complex), (grid.n,)).copy()
        if at_zero is not None:
            vals[0] = at_zero
    bad = ~np.isfinite(vals)
    if bad[1:].any():
        raise ValueError(f"multiplier undefined at lattice frequency xi={xi[np.argmax(bad[1:]) + 1]:.6g}")
    if bad[0]:
        raise ValueError("multiplier undefined at xi=0; pass at_zero explicitly")
    return vals


def _is_hermitian(vals, tol=1e-13):
    # vals[-m] == conj(vals[m]) away from the Nyquist index
    n = vals.shape[0]
    idx = np.arange(1, n // 2)
    scale = max(1.0, float(np.abs(vals).max()))
    return np.abs(vals[idx] - np.conj(vals[n - idx])).max() <= tol * scale and abs(vals[0].imag) <= tol * scale


def apply_multiplier(f: Field, m, at_zero=None) -> Field:
    """``F^{-1}[m(xi) f_hat(xi)]``; real in, real out when ``m`` is Hermitian."""
    f = _as_field(f)
    vals = symbol_on_lattice(f.grid, m, at_zero)
    out = np.fft.ifft(vals * np.fft.fft(f.values))
    if f.is_real and _is_hermitian(vals):
        return Field(f.grid, out.real)
    return Field(f.grid, out)


def derivative(f: Field, order: int = 1) -> Field:
    return apply_multiplier(f, lambda xi: (1j * xi) ** order, at_zero=0.0 if order > 0 else 1.0)


def antiderivative(f: Field, tol: float = 1e-12) -> Field:
    """Mean-zero primitive; rejects inputs with nonzero mean."""
    f = _as_field(f)
    scale = max(np.sqrt(np.mean(np.abs(f.values) ** 2)), 1e-300)
    if abs(f.mean()) > tol * scale:
        raise ValueError("antiderivative needs a mean-zero field")
    return apply_multiplier(f, lambda xi: 1.0 / (1j * xi), at_zero=0.0)


def hilbert(f: Field) -> Field:
    """``H <-> i sgn(xi)``."""
    return apply_multiplier(f, lambda xi: 1j * np.sign(xi), at_zero=0.0)


def tilbert(f: Field, delta: float = 1.0) -> Field:
    """``T <-> -i tanh(delta xi)``."""
    return apply_multiplier(f, lambda xi: -1j * np.tanh(delta * xi), at_zero=0.0)


def tilbert_inv(f: Field, delta: float = 1.0) -> Field:
    """``T^{-1} <-> i coth(delta xi)``; the mean is sent to 0."""
    return apply_multiplier(f, lambda xi: 1j / np.tanh(delta * xi), at_zero=0.0)


def tilbert_inv_dx(f: Field, delta: float = 1.0) -> Field:
    """``T^{-1} d/dx <-> -xi coth(delta xi)``."""
    # -xi coth(delta xi) = -(y coth y)/delta with y = delta xi
    return apply_multiplier(f, lambda xi: -(S._g(delta * xi) + 1.0) / delta, at_zero=0.0)


def abs_tilbert_half(f: Field, delta: float = 1.0) -> Field:
    return apply_multiplier(f, lambda xi: np.sqrt(np.abs(np.tanh(delta * xi))), at_zero=0.0)


def smoothing_P_dx(f: Field, order: int = 1, delta: float = 1.0) -> Field:
    """``(H - T^{-1}) d^order/dx^order``; bounded for ``order >= 1``."""
    if order < 1:
        raise ValueError("the smoothing operator must carry at least one derivative")
    return apply_multiplier(f, lambda xi: S.smoothing_p(xi, delta) * (1j * xi) ** order, at_zero=0.0)


def propagate(f: Field, t: float, phase) -> Field:
    """``exp(i t phase(D)) f``."""
    return apply_multiplier(f, lambda xi: np.exp(1j * t * phase(xi)))


def half_line(f: Field, sign: int) -> Field:
    """``P_+`` (sign=+1) or ``P_-`` (sign=-1); drops the mean."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return apply_multiplier(f, lambda xi: (sign * xi > 0).astype(float), at_zero=0.0)


# ---------------------------------------------------------------------------
# Littlewood-Paley


def _mollifier(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def psi_bump(r):
    """Smooth even bump: 1 on ``[-1, 1]``, 0 outside ``[-2, 2]``.

    ``psi(r) = s(2 - |r|) / (s(2 - |r|) + s(|r| - 1))`` with ``s(x) = exp(-1/x)`` for ``x > 0``.
    """
    a = np.abs(np.asarray(r, dtype=float))
    num = _mollifier(2.0 - a)
    return num / (num + _mollifier(a - 1.0))


@dataclass(frozen=True)
class DyadicIndex:
    k: int
    sign: int | None = None

    def __post_init__(self):
        if self.sign not in (None, 1, -1):
            raise ValueError("sign must be None, +1 or -1")


def shell_range(grid: GridSpec, mode: str = "exact") -> tuple[int, int]:
    """Smallest and largest ``k`` whose shells meet the nonzero lattice and cover it."""
    if mode == "exact":
        # 2^{k-1/2} <= |xi| < 2^{k+1/2}
        lo = int(np.floor(np.log2(grid.xi_min) + 0.5))
        hi = int(np.floor(np.log2(grid.xi_max) + 0.5))
    elif mode == "smooth":
        # psi(xi/2^k) - psi(xi/2^{k-1}) lives on 2^{k-2} < |xi| < 2^{k+1}
        lo = int(np.floor(np.log2(grid.xi_min)))
        hi = int(np.ceil(np.log2(grid.xi_max)))
    else:
        raise ValueError(f"unknown projector mode {mode!r}")
    return lo, hi


def lp_symbol(xi, k: int, mode: str = "exact"):
    a = np.abs(np.asarray(xi, dtype=float))
    if mode == "exact":
        return ((a >= 2.0 ** (k - 0.5)) & (a < 2.0 ** (k + 0.5))).astype(float)
    if mode == "smooth":
        return psi_bump(a / 2.0**k) - psi_bump(a / 2.0 ** (k - 1))
    raise ValueError(f"unknown projector mode {mode!r}")


def lp_low_symbol(xi, k: int, mode: str = "exact"):
    """``P_{<k}``, including the mean."""
    a = np.abs(np.asarray(xi, dtype=float))
    if mode == "exact":
        return (a < 2.0 ** (k - 0.5)).astype(float)
    if mode == "smooth":
        return psi_bump(a / 2.0 ** (k - 1))
    raise ValueError(f"unknown projector mode {mode!r}")


def _check_k(grid, k, mode):
    lo, hi = shell_range(grid, mode)
    if not lo <= k <= hi:
        raise ValueError(f"dyadic index {k} outside lattice range [{lo}, {hi}]")


def lp_project(f: Field, d, mode: str = "exact") -> Field:
    """``P_k f`` (or ``P_k^{+-} f`` when ``d.sign`` is set)."""
    f = _as_field(f)
    d = d if isinstance(d, DyadicIndex) else DyadicIndex(int(d))
    _check_k(f.grid, d.k, mode)
    if d.sign is None:
        return apply_multiplier(f, lambda xi: lp_symbol(xi, d.k, mode), at_zero=0.0)
    return apply_multiplier(f, lambda xi: lp_symbol(xi, d.k, mode) * (d.sign * xi > 0), at_zero=0.0)


def lp_low(f: Field, k: int, mode: str = "exact") -> Field:
    return apply_multiplier(_as_field(f), lambda xi: lp_low_symbol(xi, k, mode), at_zero=1.0)


def lp_high(f: Field, k: int, mode: str = "exact") -> Field:
    """``P_{>=k} = 1 - P_{<k}``."""
    return apply_multiplier(_as_field(f), lambda xi: 1.0 - lp_low_symbol(xi, k, mode), at_zero=0.0)


# ---------------------------------------------------------------------------
# norms and envelopes


def norm_l2(f: Field) -> float:
    return float(np.sqrt(f.grid.dx * np.sum(np.abs(f.values) ** 2)))


def dyadic_norms(f: Field, mode: str = "exact") -> dict[int, float]:
    lo, hi = shell_range(f.grid, mode)
    c = np.fft.fft(f.values) / f.grid.n
    a = np.abs(f.grid.xi)
    out = {}
    for k in range(lo, hi + 1):
        w = lp_symbol(a, k, mode)
        out[k] = float(np.sqrt(f.grid.L * np.sum(np.abs(w * c) ** 2)))
    return out


def norm_besov(f: Field) -> float:
    """``(||f||^2 + sup_{k<0} 2^{-k} ||P_k f||^2)^{1/2}`` with exact shells."""
    nk = dyadic_norms(f, "exact")
    neg = [2.0 ** (-k) * v * v for k, v in nk.items() if k < 0]
    return float(np.sqrt(norm_l2(f) ** 2 + (max(neg) if neg else 0.0)))


def norm_tilbert_half(f: Field, delta: float = 1.0) -> float:
    """``|| |T|^{1/2} f ||_{L^2}`` computed on the spectrum."""
    c = np.fft.fft(f.values) / f.grid.n
    w = np.abs(np.tanh(delta * f.grid.xi))
    return float(np.sqrt(f.grid.L * np.sum(w * np.abs(c) ** 2)))


@dataclass(frozen=True)
class FrequencyEnvelope:
    ks: np.ndarray
    c: np.ndarray
    delta_env: float

    def as_dict(self):
        return dict(zip(self.ks.tolist(), self.c.tolist()))

    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.c**2)))

    def slowly_varying(self, rtol: float = 1e-12) -> bool:
        k = self.ks.astype(float)
        c = self.c
        pos = c > 0
        if not pos.any():
            return True
        ratio = c[None, :] / np.where(c[:, None] > 0, c[:, None], np.inf)
        bound = 2.0 ** (-self.delta_env * np.abs(k[None, :] - k[:, None]))
        ok = ratio >= bound * (1.0 - rtol)
        return bool(ok[pos][:, pos].all())

    def dominates(self, norms: dict, rtol: float = 1e-12) -> bool:
        d = self.as_dict()
        return all(d[k] >= v * (1.0 - rtol) for k, v in norms.items())


def frequency_envelope(f: Field, delta_env: float, mode: str = "exact") -> FrequencyEnvelope:
    """Minimal envelope ``c_k = max_j 2^{-delta_env |j-k|} ||P_j f||``."""
    if not 0.0 < delta_env <= 1.0:
        raise ValueError("delta_env must lie in (0, 1]")
    nk = dyadic_norms(f, mode)
    ks = np.array(sorted(nk))
    v = np.array([nk[k] for k in ks])
    w = 2.0 ** (-delta_env * np.abs(ks[:, None] - ks[None, :]))
    return FrequencyEnvelope(ks, (w * v[None, :]).max(axis=1), float(delta_env))


def sentinel_mass(f: Field, frac: float = 0.05) -> float:
    """Fraction of the L^2 mass in the two edge windows of width ``frac L``."""
    n = f.grid.n
    w = max(1, int(round(frac * n)))
    e = np.abs(f.values) ** 2
    tot = e.sum()
    if tot == 0:
        return 0.0
    return float((e[:w].sum() + e[-w:].sum()) / tot)


# ---------------------------------------------------------------------------
# products


def dealiased_product(u: Field, v: Field) -> Field:
    """``u v`` computed with 3/2 zero padding and truncated to the lattice."""
    g = u.grid
    n = g.n
    M = 3 * n // 2
    real = u.is_real and v.is_real
    if real:
        uh, vh = np.fft.rfft(u.values), np.fft.rfft(v.values)
        up, vp = np.zeros(M // 2 + 1, complex), np.zeros(M // 2 + 1, complex)
        up[: n // 2], vp[: n // 2] = uh[: n // 2], vh[: n // 2]
        w = np.fft.irfft(up, M) * np.fft.irfft(vp, M)
        wh = np.fft.rfft(w)[: n // 2 + 1] * (M / n)
        wh[n // 2] = 0.0
        return Field(g, np.fft.irfft(wh, n))
    uh, vh = np.fft.fft(u.values), np.fft.fft(v.values)

    def pad(h):
        p = np.zeros(M, complex)
        p[: n // 2] = h[: n // 2]
        p[M - n // 2 + 1 :] = h[n // 2 + 1 :]
        return p

    w = np.fft.ifft(pad(uh)) * np.fft.ifft(pad(vh))
    wh = np.fft.fft(w) * (M / n)
    out = np.zeros(n, complex)
    out[: n // 2] = wh[: n // 2]
    out[n // 2 + 1 :] = wh[M - n // 2 + 1 :]
    return Field(g, np.fft.ifft(out))


_BILINEAR_CACHE: OrderedDict = OrderedDict()
_BILINEAR_CACHE_BYTES = 768 * 2**20
_SLAB = 2**19


def clear_symbol_cache():
    _BILINEAR_CACHE.clear()


def _active_band(c, threshold):
    """Signed index range ``[lo, hi]`` holding every coefficient above threshold."""
    n = c.shape[0]
    mag = np.abs(c)
    top = mag.max()
    if top == 0:
        return None
    signed = np.fft.fftfreq(n, 1.0 / n).astype(int)
    act = signed[mag > threshold * top]
    return int(act.min()), int(act.max())


def _band_coeffs(c, lo, hi):
    n = c.shape[0]
    return c[np.arange(lo, hi + 1) % n]


def _eval_symbol(b, g, bu, bv):
    mu = np.arange(bu[0], bu[1] + 1)
    eta = 2 * np.pi * np.arange(bv[0], bv[1] + 1) / g.L
    Smat = np.empty((mu.size, eta.size), complex)
    rows = max(1, _SLAB // max(1, eta.size))
    for r0 in range(0, mu.size, rows):
        XI, ETA = np.meshgrid(2 * np.pi * mu[r0 : r0 + rows] / g.L, eta, indexing="ij")
        Smat[r0 : r0 + rows] = np.broadcast_to(np.asarray(b(XI, ETA), dtype=complex), XI.shape)
    if not np.all(np.isfinite(Smat)):
        raise ValueError("bilinear symbol is not finite on the active lattice")
    herm = bool(
        bu[0] == -bu[1]
        and bv[0] == -bv[1]
        and np.allclose(Smat[::-1, ::-1], np.conj(Smat), rtol=1e-13, atol=1e-14 * max(1.0, np.abs(Smat).max()))
    )
    return Smat, herm


def _symbol_matrix(b, g, bu, bv, key):
    """Symbol on the lattice block ``bu x bv``.

    Keyed matrices are evaluated on a symmetric block padded by ~1/8 and
    cached (LRU, bounded in bytes); later requests inside a cached block are
    served by slicing, so slowly drifting bands along a trace do not
    trigger re-evaluation.
    """
    if key is None:
        return _eval_symbol(b, g, bu, bv)
    base = (key, g.L, g.n)
    for ck, (P, Smat, herm) in _BILINEAR_CACHE.items():
        if ck[:3] != base:
            continue
        pu, pv = P
        if pu[0] <= bu[0] and bu[1] <= pu[1] and pv[0] <= bv[0] and bv[1] <= pv[1]:
            _BILINEAR_CACHE.move_to_end(ck)
            sub = Smat[bu[0] - pu[0] : bu[1] - pu[0] + 1, bv[0] - pv[0] : bv[1] - pv[0] + 1]
            sym = bu[0] == -bu[1] and bv[0] == -bv[1] and pu[0] == -pu[1] and pv[0] == -pv[1]
            return sub, bool(herm and sym)
    half = g.n // 2 - 1

    def grow(bd):
        if bd[0] < -half:
            return bd
        r = max(-bd[0], bd[1])
        r = min(half, r + max(8, r // 8))
        return (-r, r)

    P = (grow(bu), grow(bv))
    Smat, herm = _eval_symbol(b, g, *P)
    if Smat.nbytes > _BILINEAR_CACHE_BYTES // 2:
        return _eval_symbol(b, g, bu, bv)
    # drop covered blocks of the same symbol, then evict by size
    for ck in [ck for ck, (Q, _, _) in _BILINEAR_CACHE.items() if ck[:3] == base and P[0][0] <= Q[0][0] and Q[0][1] <= P[0][1] and P[1][0] <= Q[1][0] and Q[1][1] <= P[1][1]]:
        del _BILINEAR_CACHE[ck]
    _BILINEAR_CACHE[base + P] = (P, Smat, herm)
    while sum(v[1].nbytes for v in _BILINEAR_CACHE.values()) > _BILINEAR_CACHE_BYTES:
        _BILINEAR_CACHE.popitem(last=False)
    return _symbol_matrix(b, g, bu, bv, key)


def bilinear_apply(
    b,
    u: Field,
    v: Field,
    key=None,
    dealias: bool = True,
    threshold: float = 1e-15,
) -> Field:
    """Bilinear form with symbol ``b(xi, eta)`` by direct Fourier convolution.

    Only coefficients above ``threshold * max`` enter the double sum.  With
    ``dealias=True`` the sum is exact (equivalent to padding to >= 3n/2
    modes and truncating); with ``dealias=False`` outputs beyond the
    lattice wrap around and an ``AliasingError`` is raised if either input
    occupies the top third of the spectrum.  ``key`` enables caching of the
    symbol matrix.
    """
    g = u.grid
    if v.grid != g:
        raise ValueError("fields live on different grids")
    n = g.n
    cu = np.fft.fft(u.values) / n
    cv = np.fft.fft(v.values) / n
    bu, bv = _active_band(cu, threshold), _active_band(cv, threshold)
    real_in = u.is_real and v.is_real
    if bu is None or bv is None:
        return Field(g, np.zeros(n) if real_in else np.zeros(n, complex))
    if not dealias:
        third = n // 3
        if max(abs(bu[0]), abs(bu[1]), abs(bv[0]), abs(bv[1])) > third:
            raise AliasingError("data occupies the top third of the spectrum and padding is disabled")

    Smat, herm = _symbol_matrix(b, g, bu, bv, key)

    acc = _accel.antidiag_accumulate(Smat, _band_coeffs(cu, *bu), _band_coeffs(cv, *bv))
    m_out = np.arange(bu[0] + bv[0], bu[1] + bv[1] + 1)
    out = np.zeros(n, complex)
    if dealias:
        # Nyquist dropped, as in dealiased_product
        keep = np.abs(m_out) < n // 2
        np.add.at(out, m_out[keep] % n, acc[keep])
    else:
        np.add.at(out, m_out % n, acc)
    vals = np.fft.ifft(out * n)
    if real_in and herm:
        return Field(g, vals.real)
    return Field(g, vals)


def trilinear_apply(r, u: Field, v: Field, w: Field, threshold: float = 1e-15) -> Field:
    """Trilinear form with symbol ``r(xi, eta, zeta)``; O(N^3), meant for small bands."""
    g = u.grid
    n = g.n
    cs = [np.fft.fft(f.values) / n for f in (u, v, w)]
    bands = [_active_band(c, threshold) for c in cs]
    if any(bd is None for bd in bands):
        return Field(g, np.zeros(n))
    (l1, h1), (l2, h2), (l3, h3) = bands
    c1, c2, c3 = (_band_coeffs(c, *bd) for c, bd in zip(cs, bands))
    ETA, ZETA = np.meshgrid(2 * np.pi * np.arange(l2, h2 + 1) / g.L, 2 * np.pi * np.arange(l3, h3 + 1) / g.L, indexing="ij")
    acc = np.zeros((h1 - l1) + (h2 - l2) + (h3 - l3) + 1, complex)
    for i, m1 in enumerate(range(l1, h1 + 1)):
        Smat = np.asarray(r(np.full_like(ETA, 2 * np.pi * m1 / g.L), ETA, ZETA), dtype=complex)
        part = _accel.antidiag_accumulate(Smat, c2, c3)
        acc[i : i + part.shape[0]] += c1[i] * part
    m_out = np.arange(l1 + l2 + l3, h1 + h2 + h3 + 1)
    keep = np.abs(m_out) < n // 2
    out = np.zeros(n, complex)
    np.add.at(out, m_out[keep] % n, acc[keep])
    vals = np.fft.ifft(out * n)
    if u.is_real and v.is_real and w.is_real and np.abs(vals.imag).max() <= 1e-12 * max(1e-300, np.abs(vals).max()):
        return Field(g, vals.real)
    return Field(g, vals)
