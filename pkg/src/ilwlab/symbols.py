"""Scalar Fourier symbols of the ILW dispersion and its relatives.

Conventions used throughout the package (Fourier transform
``f_hat(xi) = int exp(-i x xi) f(x) dx``, so ``d/dx <-> i xi``):

* Hilbert transform ``H <-> i sgn(xi)``
* ``T^{-1} <-> i coth(delta xi)`` and ``T <-> -i tanh(delta xi)``
* dispersion phase ``a(xi) = xi^2 coth(delta xi)``; with the transport term
  ``A(xi) = a(xi) - xi/delta``; the linear flow is ``exp(i t A(D))``.

Every function is vectorised over numpy arrays and is pure.  The
``delta`` dependence is handled by evaluating the ``delta = 1`` kernels at
``delta * xi`` and rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

# Radius (in delta*xi) inside which the Bernoulli series replaces the
# exp-based closed forms.  The series converges for |y| < pi.
TAU_SERIES = 1.0
# Half-width of the bands around the resonance lines where Taylor models
# in the small frequency are used.
TAU_DIV = 1e-3
# Inside max(|xi|, |eta|, |xi + eta|) <= R_ORIGIN the bivariate power-sum
# series is used for the triple quotients.
R_ORIGIN = 1.0

_N_SERIES = 24


@dataclass(frozen=True)
class SymbolPoint:
    """Frequency arguments for a symbol evaluation.

    ``zeta`` is always ``-xi - eta`` when ``eta`` is given, so that the
    resonance triple sums to zero exactly.
    """

    xi: float
    eta: float | None = None
    delta: float = 1.0

    def __post_init__(self):
        if not self.delta >= 1.0:
            raise ValueError(f"delta must be >= 1, got {self.delta}")

    @property
    def zeta(self) -> float | None:
        if self.eta is None:
            return None
        return -self.xi - self.eta


def _unpack(p, delta):
    if isinstance(p, SymbolPoint):
        return p.xi, p.eta, p.delta
    return p, None, delta


# ---------------------------------------------------------------------------
# series coefficients


def _bernoulli(nmax: int) -> list[Fraction]:
    """Bernoulli numbers B_0..B_nmax (B_1 = -1/2)."""
    a = [Fraction(0)] * (nmax + 1)
    out = []
    for m in range(nmax + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    out[1] = -out[1]  # Akiyama-Tanigawa yields B_1 = +1/2
    return out


@lru_cache(maxsize=None)
def xcoth_coefficients(nterms: int = _N_SERIES) -> np.ndarray:
    """Coefficients ``c_k`` of ``y coth y = sum_k c_k y^(2k)``."""
    B = _bernoulli(2 * nterms)
    fact = Fraction(1)
    coeffs = []
    for k in range(nterms):
        if k > 0:
            fact *= (2 * k - 1) * (2 * k)
        coeffs.append(float(Fraction(2) ** (2 * k) * B[2 * k] / fact))
    return np.array(coeffs)


def _even_series(y2, coeffs):
    # Horner in y^2
    out = np.zeros_like(y2)
    for c in coeffs[::-1]:
        out = out * y2 + c
    return out


# ---------------------------------------------------------------------------
# delta = 1 kernels


def _coth_tail(ay):
    """``2 / expm1(2|y|)`` without overflow warnings (|y| > 0)."""
    with np.errstate(over="ignore"):
        return 2.0 / np.expm1(np.minimum(2.0 * ay, 1400.0))


def _g(y):
    """``y coth y - 1`` (even, ~ y^2/3 at 0)."""
    y = np.asarray(y, dtype=float)
    ay = np.abs(y)
    small = ay < TAU_SERIES
    out = np.empty_like(y)
    c = xcoth_coefficients()
    ys = y[small]
    out[small] = _even_series(ys * ys, c[1:]) * ys * ys
    yl = ay[~small]
    out[~small] = yl * (1.0 + _coth_tail(yl)) - 1.0
    return out


def _dA1(y):
    """Derivative of ``y^2 coth y - y`` (even)."""
    y = np.asarray(y, dtype=float)
    ay = np.abs(y)
    small = ay < TAU_SERIES
    out = np.empty_like(y)
    c = xcoth_coefficients()
    k = np.arange(len(c))
    ys = y[small]
    # A = sum_{k>=1} c_k y^(2k+1)  =>  A' = sum (2k+1) c_k y^(2k)
    out[small] = _even_series(ys * ys, ((2 * k + 1) * c)[1:]) * ys * ys
    yl = ay[~small]
    g = yl * (1.0 + _coth_tail(yl)) - 1.0
    # y^2 csch^2 y, written with exp(-2y) to stay finite
    with np.errstate(over="ignore", under="ignore"):
        e = np.exp(-2.0 * yl)
        ycsch2 = (2.0 * yl) ** 2 * e / (1.0 - e) ** 2
    out[~small] = 2.0 * g + 1.0 - ycsch2
    return out


@lru_cache(maxsize=None)
def _coth_derivative_polys(nmax: int):
    """``coth^(n) = S * q_n(coth)`` with ``S = 1 - coth^2``; q_n as coeff arrays."""
    P = np.polynomial.polynomial
    q = [None, np.array([1.0])]
    for _ in range(1, nmax):
        qn = q[-1]
        nxt = P.polyadd(P.polymul([0.0, -2.0], qn), P.polymul([1.0, 0.0, -1.0], P.polyder(qn)))
        q.append(nxt)
    return q


def coth_derivatives(y, nmax: int):
    """``[coth y, coth' y, ..., coth^(nmax) y]`` for ``|y|`` away from 0."""
    y = np.asarray(y, dtype=float)
    ay = np.abs(y)
    sgn = np.sign(y)
    C = sgn * (1.0 + _coth_tail(ay))
    with np.errstate(over="ignore", under="ignore"):
        e = np.exp(-2.0 * ay)
        S = -4.0 * e / (1.0 - e) ** 2  # 1 - coth^2 = -csch^2
    polys = _coth_derivative_polys(max(nmax, 1))
    out = [C]
    for n in range(1, nmax + 1):
        out.append(S * np.polynomial.polynomial.polyval(C, polys[n]))
    return out


def A_derivatives(y, kmax: int):
    """``[A, A', ..., A^(kmax)]`` of ``A(y) = y^2 coth y - y``, valid for |y| >~ 0.3."""
    y = np.asarray(y, dtype=float)
    C = coth_derivatives(y, kmax)
    out = [y * y * C[0] - y]
    for k in range(1, kmax + 1):
        v = y * y * C[k] + 2 * k * y * C[k - 1]
        if k >= 2:
            v = v + k * (k - 1) * C[k - 2]
        if k == 1:
            v = v - 1.0
        out.append(v)
    return out


# ---------------------------------------------------------------------------
# public scalar symbols


def dispersion_a(p, delta: float = 1.0):
    """Phase ``a(xi) = xi^2 coth(delta xi)``; odd, ``a(0) = 0``."""
    xi, _, delta = _unpack(p, delta)
    xi = np.asarray(xi, dtype=float)
    y = delta * xi
    return xi * (_g(y) + 1.0) / delta


def dispersion_A(p, delta: float = 1.0):
    """Phase with the transport term removed: ``a(xi) - xi/delta``."""
    xi, _, delta = _unpack(p, delta)
    xi = np.asarray(xi, dtype=float)
    return xi * _g(delta * xi) / delta


def group_velocity(p, delta: float = 1.0):
    """``a'(xi) = 2 xi coth(delta xi) - delta xi^2 csch^2(delta xi)``; even, ``a'(0) = 1/delta``."""
    xi, _, delta = _unpack(p, delta)
    xi = np.asarray(xi, dtype=float)
    return (_dA1(delta * xi) + 1.0) / delta


def group_velocity_A(p, delta: float = 1.0):
    """``A'(xi) = a'(xi) - 1/delta``, computed without cancellation near 0."""
    xi, _, delta = _unpack(p, delta)
    xi = np.asarray(xi, dtype=float)
    return _dA1(delta * xi) / delta


def smoothing_p(p, delta: float = 1.0):
    """Symbol of ``H - T^{-1}``: ``i (sgn xi - coth(delta xi))``.

    Raises ``ValueError`` at ``xi = 0`` where the symbol is singular.
    """
    xi, _, delta = _unpack(p, delta)
    xi = np.asarray(xi, dtype=float)
    if np.any(xi == 0):
        raise ValueError("smoothing_p is singular at xi = 0")
    ay = np.abs(delta * xi)
    # sgn - coth = -sgn * 2/expm1(2|y|)
    return -1j * np.sign(xi) * _coth_tail(ay)


def sigma_tanh(p, delta: float = 1.0):
    """Smooth signum surrogate ``tanh(delta xi)``."""
    xi, _, delta = _unpack(p, delta)
    return np.tanh(delta * np.asarray(xi, dtype=float))


def tanh_over_x(y):
    """``tanh(y)/y`` with the removable singularity filled in."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-4
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, 1.0 - y * y / 3.0 + 2.0 * y**4 / 15.0, np.tanh(y) / np.where(small, 1.0, y))
    return out


# ---------------------------------------------------------------------------
# triple sums  F(xi) + F(eta) + F(zeta),  xi + eta + zeta = 0


def _A_series_coeffs():
    """Odd Taylor coefficients f_m (index m) of A(y) = y^2 coth y - y."""
    c = xcoth_coefficients()
    f = np.zeros(2 * len(c) + 1)
    for k in range(1, len(c)):
        f[2 * k + 1] = c[k]
    return f


def _h_series_coeffs():
    """Odd Taylor coefficients of h(y) = y A'(y)."""
    f = _A_series_coeffs()
    return f * np.arange(len(f))


def _h_derivatives(y, kmax):
    dA = A_derivatives(y, kmax + 1)
    return [y * dA[1]] + [y * dA[k + 1] + k * dA[k] for k in range(1, kmax + 1)]


_TRIPLE_FUNCS = {
    "A": (_A_series_coeffs, A_derivatives, lambda y: y * _g(y)),
    "h": (_h_series_coeffs, _h_derivatives, lambda y: y * _dA1(y)),
}


def _power_sum_quotients(x, y, mmax):
    """``q_m = (x^m + y^m + z^m)/(x y z)`` for odd m, with z = -x-y."""
    z = -x - y
    e2 = x * y + y * z + z * x
    e3 = x * y * z
    p = {0: np.full_like(x, 3.0), 2: -2.0 * e2}
    q = {1: np.zeros_like(x), 3: np.full_like(x, 3.0)}
    for m in range(4, mmax + 1):
        if m % 2:
            q[m] = -e2 * q[m - 2] + p[m - 3]
        else:
            p[m] = -e2 * p[m - 2] + e3 * e3 * q[m - 3]
    return q


def triple_quotient(name: str, x, y):
    """``(F(x) + F(y) + F(z)) / (x y z)`` for odd F, ``z = -x - y``.

    Uses a power-sum series near the origin, a Taylor model in the small
    variable inside ``TAU_DIV`` of a resonance line, and the direct formula
    elsewhere.  Only delta = 1.
    """
    coeffs_fn, derivs_fn, F = _TRIPLE_FUNCS[name]
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    x = x.astype(float).ravel()
    y = y.astype(float).ravel()
    z = -x - y
    trip = np.stack([x, y, z])
    mags = np.abs(trip)
    out = np.empty_like(x)

    origin = mags.max(axis=0) <= R_ORIGIN
    band = (~origin) & (mags.min(axis=0) < TAU_DIV)
    direct = ~(origin | band)

    if origin.any():
        f = coeffs_fn()
        mmax = len(f) - 1
        q = _power_sum_quotients(x[origin], y[origin], mmax)
        acc = np.zeros(origin.sum())
        for m in range(3, mmax + 1, 2):
            acc += f[m] * q[m]
        out[origin] = acc

    if band.any():
        f = coeffs_fn()
        t = trip[:, band]
        small = np.argmin(np.abs(t), axis=0)
        # expand around an exact input; z = -x-y is exact only when it is
        # the small one (Sterbenz)
        xs = np.where(small == 0, t[1], t[0])
        ys = np.where(small == 0, t[0], np.where(small == 1, t[1], t[2]))
        d = derivs_fn(xs, 5)
        tf_over_y = (
            f[1] - d[1]
            - ys * d[2] / 2.0
            + ys**2 * (f[3] - d[3] / 6.0)
            - ys**3 * d[4] / 24.0
            + ys**4 * (f[5] - d[5] / 120.0)
        )
        out[band] = tf_over_y / (xs * (-xs - ys))

    if direct.any():
        xd, yd, zd = x[direct], y[direct], z[direct]
        out[direct] = (F(xd) + F(yd) + F(zd)) / (xd * yd * zd)

    return out.reshape(shape)


def resonance_omega2(p, eta=None, delta: float = 1.0):
    """Two-wave resonance function ``a(xi+eta) - a(xi) - a(eta)``.

    Vanishes exactly on ``xi = 0``, ``eta = 0`` and ``xi + eta = 0``.
    """
    if isinstance(p, SymbolPoint):
        xi, eta, delta = p.xi, p.eta, p.delta
    else:
        xi = p
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    x, y = delta * xi, delta * eta
    # Omega = xi eta (xi+eta) Q_A  (in the scaled variables)
    return x * y * (x + y) * triple_quotient("A", x, y) / delta**2


def resonance_quotient(x, y):
    """``Omega(x, y) / (x y (x + y))`` at delta = 1; positive, 1 at the origin."""
    return triple_quotient("A", x, y)


def dA_difference_quotient(x, y):
    """``(A'(y) - A'(x)) / (x + y)`` at delta = 1, smooth across ``x + y = 0``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    x = x.ravel().astype(float)
    y = y.ravel().astype(float)
    s = x + y
    out = np.empty_like(x)
    origin = np.maximum(np.abs(x), np.abs(y)) <= R_ORIGIN
    band = (~origin) & (np.abs(s) < TAU_DIV)
    direct = ~(origin | band)

    if origin.any():
        c = xcoth_coefficients()
        xo, yo = x[origin], y[origin]
        x2, y2 = xo * xo, yo * yo
        u = np.ones_like(xo)  # u_k = sum_j y^(2j) x^(2(k-1-j))
        ypow = y2.copy()
        acc = np.zeros_like(xo)
        for k in range(1, len(c)):
            acc += (2 * k + 1) * c[k] * u
            u = x2 * u + ypow
            ypow = ypow * y2
        out[origin] = (yo - xo) * acc

    if band.any():
        xb, sb = x[band], s[band]
        d = A_derivatives(xb, 5)
        out[band] = -d[2] + sb * d[3] / 2.0 - sb**2 * d[4] / 6.0 + sb**3 * d[5] / 24.0

    if direct.any():
        xd, yd = x[direct], y[direct]
        out[direct] = (_dA1(yd) - _dA1(xd)) / (xd + yd)

    return out.reshape(shape)
