"""Linear ILW flow: fundamental solution, dyadic kernels, weights and the operator L.

Frames: ``"transport"`` uses ``A(xi) = xi^2 coth(delta xi) - xi/delta`` and
``L = x + t A'(D)``; ``"no-transport"`` uses ``a(xi)`` and ``L = x + t a'(D)``.
Waves of frequency ``xi`` travel with velocity ``-A'(xi)`` (resp. ``-a'(xi)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from . import grid as G
from . import symbols as S
from .solver import NumericalGuardError

KAPPA = 0.05
FRAMES = ("transport", "no-transport")


def _phase(frame, delta):
    if frame == "transport":
        return (lambda xi: S.dispersion_A(xi, delta)), (lambda xi: S.group_velocity_A(xi, delta))
    if frame == "no-transport":
        return (lambda xi: S.dispersion_a(xi, delta)), (lambda xi: S.group_velocity(xi, delta))
    raise ValueError(f"unknown frame {frame!r}")


def _bracket(y):
    return np.sqrt(1.0 + y * y)


def weight_omega(t, x, which: int = 0, kappa: float = KAPPA):
    """Decay weights ``omega_0`` (``which=0``) and ``omega_1`` (``which=1``)."""
    if not np.all(np.asarray(t) > 0):
        raise ValueError("weights need t > 0")
    if which not in (0, 1):
        raise ValueError("which must be 0 or 1")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    s = t ** (-1.0 / 3.0)
    y = s * x
    yp = s * np.maximum(x, 0.0)
    if which == 0:
        right = s * _bracket(y) ** (-0.25) * _bracket(yp) ** (-0.75 - kappa)
    else:
        right = s**2 * _bracket(y) ** 0.25 * _bracket(yp) ** (-1.25)
    return np.where(x >= -t, right, t ** (-0.5))


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class KernelSample:
    t: float
    x: np.ndarray
    K: np.ndarray
    TK: np.ndarray
    band: tuple
    dxi: float

    def to_csv(self, path, header_comment=None):
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("t,x,re,im,band\n")
            tag = _band_tag(self.band)
            for xv, kv in zip(self.x, self.K):
                fh.write(f"{self.t!r},{xv!r},{kv.real!r},{kv.imag!r},{tag}\n")


def _band_tag(band):
    return band[0] if len(band) == 1 else f"{band[0]}{band[1]}"


# The bump windows have Fourier tails decaying like exp(-c sqrt(|x| s)), with s
# the transition scale; the tail is below 1e-10 of the peak past TAIL / s.
TAIL = 500.0


def _window(band, xi_max=None):
    """Frequency window, its support half-width and its transition scale."""
    kind = band[0]
    if kind == "shell":
        j = band[1]
        return (lambda xi: G.lp_symbol(xi, j, "smooth")), 2.0 ** (j + 1), 2.0**j
    if kind == "low":
        # P_{<j}: psi(xi / 2^{j-1})
        j = band[1]
        return (lambda xi: G.psi_bump(xi / 2.0 ** (j - 1))), 2.0**j, 2.0 ** (j - 1)
    if kind == ">0":
        # 1 - psi(xi), smoothly tapered at xi_max
        return (lambda xi: (1.0 - G.psi_bump(xi)) * G.psi_bump(2.0 * xi / xi_max)), xi_max, min(1.0, xi_max / 2.0)
    raise ValueError(f"unknown band {band!r}")


def _parse_band(band):
    if isinstance(band, str):
        if band in (">0", "full"):
            return (band,)
        if band.startswith("shell"):
            return ("shell", int(band[5:]))
        raise ValueError(f"unknown band {band!r}")
    return tuple(band)


def kernel(
    t: float,
    band,
    x,
    delta: float = 1.0,
    frame: str = "transport",
    oversample: float = 1.0,
    j_min: int = -12,
    xi_cap: float | None = None,
) -> KernelSample:
    """Windowed inverse Fourier integral ``(1/2pi) int w(xi) exp(i(x xi + t A(xi))) dxi``.

    ``band`` is ``("shell", j)``, ``">0"``, ``("low", j)`` or ``"full"``.  The
    trapezoid cell ``dxi`` is chosen so the phase moves at most ``pi/4`` per
    cell over the probed ``x`` and so the alias period ``2 pi / dxi`` clears
    the probed range, the travelled distance and the window's Fourier tail
    (then divided by ``oversample``).  ``"full"``
    is the sum of ``K_{>0}``, ``K_j`` for ``j_min <= j <= 0`` and the
    remainder ``P_{<j_min} K``.
    """
    if not t > 0:
        raise ValueError("kernel needs t > 0")
    band = _parse_band(band)
    x = np.asarray(x, dtype=float)
    if band[0] == "full":
        parts = [(">0",), ("low", j_min)] + [("shell", j) for j in range(j_min, 1)]
        samples = [kernel(t, b, x, delta, frame, oversample, j_min, xi_cap) for b in parts]
        return KernelSample(
            t, x, sum(s.K for s in samples), sum(s.TK for s in samples), band, min(s.dxi for s in samples)
        )
    A, dA = _phase(frame, delta)
    X = float(np.abs(x).max()) if x.size else 0.0
    xi_max = None
    if band[0] == ">0":
        # stationary points |dA| = |x|/t must sit well inside the taper
        xs = 1.0
        while float(dA(np.array([xs]))[0]) < X / t:
            xs *= 2.0
        xi_max = max(8.0, 4.0 * xs) if xi_cap is None else xi_cap
    w, half, scale = _window(band, xi_max)
    vmax = float(np.abs(dA(np.linspace(0.0, half, 257))).max())
    dxi = min((np.pi / 4.0) / (X + t * vmax + 1.0), 2.0 * np.pi / (2.0 * X + t * vmax + TAIL / scale)) / oversample
    m = int(np.ceil(half / dxi))
    xi = dxi * np.arange(-m, m + 1)
    wv = w(xi) * dxi / (2.0 * np.pi)
    ph = A(xi)
    K = _accel.oscillatory_sum(x, t, xi, wv, ph)
    TK = _accel.oscillatory_sum(x, t, xi, wv * (-1j * np.tanh(delta * xi)), ph)
    return KernelSample(float(t), x, K, TK, band, dxi)


def kernel_bound_ratio(t: float, j: int, x, delta: float = 1.0) -> float:
    """``sup_x |K_j| 2^{j/2} (t + 2^{-3j})^{1/2}``."""
    s = kernel(t, ("shell", j), x, delta)
    return float(np.abs(s.K).max() * 2.0 ** (j / 2.0) * np.sqrt(t + 2.0 ** (-3 * j)))


def shell_probe_x(t: float, j: int, n: int = 4001, delta: float = 1.0) -> np.ndarray:
    """x-grid that covers the bulk of ``K_j(t)``: the travelled distance plus 40 wavelengths."""
    v = float(S.group_velocity_A(np.array([2.0 ** (j + 1)]), delta)[0])
    pad = 40.0 * 2.0 ** (-j)
    return np.linspace(-t * v - pad, pad, n)


def peak_position(t: float, j: int, n: int = 4001, delta: float = 1.0) -> float:
    x = shell_probe_x(t, j, n, delta)
    s = kernel(t, ("shell", j), x, delta)
    return float(x[np.argmax(np.abs(s.K))])


def dyadic_sum_bound(t, x, j_min: int = -40):
    """Dyadic sum of the ``K_j`` envelopes with ``N = 1`` tails plus the ``K_{>0}`` envelope."""
    t = float(t)
    x = np.asarray(x, dtype=float)
    tot = np.where(x < -t / 8.0, t**-0.5, t**-0.5 / (1.0 + np.abs(x) + t))
    for j in range(j_min, 1):
        base = 2.0 ** (-j / 2.0) * (t + 2.0 ** (-3 * j)) ** -0.5
        inside = (x > -(2.0 ** (2 * j + 4)) * t) & (x < -(2.0 ** (2 * j - 4)) * t)
        tot = tot + np.where(inside, base, base / (1.0 + 2.0**j * np.abs(x) + 2.0 ** (3 * j) * t))
    return tot


# ---------------------------------------------------------------------------
# vector field L and the Klainerman-Sobolev surrogate


def wrap_guard(f: G.Field, limit: float = 1e-8, frac: float = 0.05):
    m = G.sentinel_mass(f, frac)
    if m > limit:
        raise NumericalGuardError(f"wrap contamination: sentinel-window mass fraction {m:.2e} > {limit:g}")


def vectorfield_L(f: G.Field, t: float, delta: float = 1.0, frame: str = "transport", x0: float = 0.0, guard: bool = True) -> G.Field:
    """``(x - x0) f + t A'(D) f``."""
    if guard:
        wrap_guard(f)
    _, dA = _phase(frame, delta)
    return (f.grid.x - x0) * f + t * G.apply_multiplier(f, dA)


def linear_flow(f: G.Field, t: float, delta: float = 1.0, frame: str = "transport") -> G.Field:
    A, _ = _phase(frame, delta)
    return G.propagate(f, t, A)


@dataclass(frozen=True)
class KSReport:
    times: np.ndarray
    r0: np.ndarray
    r1: np.ndarray

    @property
    def spread0(self) -> float:
        return float(self.r0.max() / self.r0.min())

    @property
    def spread1(self) -> float:
        return float(self.r1.max() / self.r1.min())

    def to_csv(self, path, header_comment=None):
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("t,r0,r1\n")
            np.savetxt(fh, np.column_stack([self.times, self.r0, self.r1]), delimiter=",", fmt="%.17g")


def ks_constants(phi: G.Field, t: float, delta: float = 1.0, frame: str = "transport", x0: float = 0.0, kappa: float = KAPPA):
    """``(r0, r1)`` for one section ``phi`` at time ``t``."""
    x = phi.grid.x - x0
    norm = G.norm_besov(phi) + G.norm_tilbert_half(vectorfield_L(phi, t, delta, frame, x0), delta)
    r0 = float(np.max(np.abs(phi.values) / weight_omega(t, x, 0, kappa)) / norm)
    Tphi = G.tilbert(phi, delta)
    r1 = float(np.max(np.abs(Tphi.values) / weight_omega(t, x, 1, kappa)) / norm)
    return r0, r1


def ks_ratio(datum: G.Field, times, delta: float = 1.0, frame: str = "transport", x0: float = 0.0, kappa: float = KAPPA) -> KSReport:
    """Klainerman-Sobolev constants along the linear flow of ``datum``.

    ``x0`` is the origin of the weights and of ``L``; translating the datum
    and ``x0`` together leaves the report unchanged.
    """
    times = np.asarray(times, dtype=float)
    r0, r1 = [], []
    for t in times:
        phi = linear_flow(datum, t, delta, frame)
        a, b = ks_constants(phi, t, delta, frame, x0, kappa)
        r0.append(a)
        r1.append(b)
    return KSReport(times, np.array(r0), np.array(r1))
