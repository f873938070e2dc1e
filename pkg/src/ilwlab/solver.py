"""ETDRK4 time integration of ILW and the BO/KdV comparison flows.

All models share the form ``phi_t = i w(D) phi + (1/2) d_x(phi^2)`` and differ
only in the phase ``w``:

=================  ===============================  ==========================
model              phase ``w(xi)``                  equation
=================  ===============================  ==========================
``ilw-transport``  ``xi^2 coth(d xi) - xi/d``       ``(d_t + d^-1 d_x + T^-1 d_x^2) phi = (phi^2)_x / 2``
``ilw``            ``xi^2 coth(d xi)``              transport removed
``bo``             ``xi |xi|``                      Benjamin-Ono
``kdv``            ``d xi^3 / 3``                   low-frequency limit
=================  ===============================  ==========================
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import grid as G
from . import symbols as S

log = logging.getLogger(__name__)

MODELS = ("ilw-transport", "ilw", "bo", "kdv")


class NumericalGuardError(RuntimeError):
    """A numerical guard tripped (blow-up, resolution or wrap contamination)."""

    def __init__(self, msg, time=None):
        super().__init__(msg if time is None else f"{msg} (t={time:.6g})")
        self.time = time


def phase(model: str, delta: float = 1.0):
    """Real odd phase ``w(xi)`` of the linear flow ``exp(i t w(D))``."""
    if model == "ilw-transport":
        return lambda xi: S.dispersion_A(xi, delta)
    if model == "ilw":
        return lambda xi: S.dispersion_a(xi, delta)
    if model == "bo":
        return lambda xi: xi * np.abs(xi)
    if model == "kdv":
        return lambda xi: delta * xi**3 / 3.0
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class Datum:
    """Initial datum descriptor.

    ``kind`` is one of ``gaussian`` (``amp exp(-(x-c)^2/w^2)``), ``sech2``,
    ``shell`` (gaussian envelope of width ``width`` modulating
    ``cos(2^k x)``), ``two-bump`` (two gaussians at ``center`` and
    ``center + sep`` with opposite sign), ``hat`` (``amp (1 - 2x^2/w^2)
    exp(-x^2/w^2)``, mean zero on the line) or ``file`` (a Field CSV/binary).
    The grid mean is removed unless ``zero_mean`` is false; the nonlinear
    flows need it, the linear flow does not.
    """

    kind: str = "gaussian"
    amplitude: float = 0.1
    width: float = 3.0
    center: float = 0.0
    k: int = -3
    sep: float = 20.0
    path: str | None = None
    zero_mean: bool = True

    def build(self, grid: G.GridSpec) -> G.Field:
        x = grid.x - self.center
        if self.kind == "gaussian":
            v = np.exp(-(x**2) / self.width**2)
        elif self.kind == "sech2":
            v = 1.0 / np.cosh(x / self.width) ** 2
        elif self.kind == "shell":
            v = np.exp(-(x**2) / self.width**2) * np.cos(2.0**self.k * x)
        elif self.kind == "hat":
            v = (1.0 - 2.0 * x**2 / self.width**2) * np.exp(-(x**2) / self.width**2)
        elif self.kind == "two-bump":
            v = np.exp(-(x**2) / self.width**2) - np.exp(-((x - self.sep) ** 2) / self.width**2)
        elif self.kind == "file":
            if self.path is None:
                raise ValueError("file datum needs a path")
            f = G.Field.from_binary(self.path) if self.path.endswith(".bin") else G.Field.from_csv(self.path)
            if f.grid.n != grid.n or not np.isclose(f.grid.L, grid.L):
                raise ValueError("datum file grid does not match the configured grid")
            v = f.values.real
        else:
            raise ValueError(f"unknown datum kind {self.kind!r}")
        if self.kind != "file":
            v = self.amplitude * v
        return G.Field(grid, v - v.mean() if self.zero_mean else v)


# ---------------------------------------------------------------------------
# phi functions


def phi_functions(z, n_contour: int = 32, radius: float = 1.0):
    """``phi_1, phi_2, phi_3`` at complex ``z`` by the contour mean.

    ``phi_k(z) = mean_j phi_k(z + r e^{i theta_j})`` over a full circle,
    which avoids the cancellation in the closed forms near ``z = 0``.
    """
    z = np.asarray(z, dtype=complex)
    th = 2.0 * np.pi * (np.arange(n_contour) + 0.5) / n_contour
    w = z[..., None] + radius * np.exp(1j * th)
    ew = np.exp(w)
    p1 = np.mean((ew - 1.0) / w, axis=-1)
    p2 = np.mean((ew - 1.0 - w) / w**2, axis=-1)
    p3 = np.mean((ew - 1.0 - w - w**2 / 2.0) / w**3, axis=-1)
    return p1, p2, p3


# ---------------------------------------------------------------------------
# config / trace


@dataclass(frozen=True)
class SimConfig:
    grid: G.GridSpec
    delta: float = 1.0
    model: str = "ilw-transport"
    dt: float = 1e-3
    t_end: float = 1.0
    datum: Datum = field(default_factory=Datum)
    dealias: bool = True
    cadence: int = 100
    diagnostics: bool = True
    cfl: float = 2.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError("t_end must be an integer multiple of dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class SimTrace:
    times: np.ndarray
    fields: list
    diagnostics: dict
    dt: float
    config: SimConfig | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("trace times must be strictly increasing")
        for k, v in self.diagnostics.items():
            if len(v) != t.size:
                raise ValueError(f"diagnostic {k!r} has {len(v)} entries for {t.size} snapshots")
        self.times = t

    def __len__(self):
        return self.times.size

    def to_csv(self, path, header_comment=None):
        cols = ["t"] + list(self.diagnostics)
        rows = np.column_stack([self.times] + [np.asarray(self.diagnostics[k], dtype=float) for k in self.diagnostics])
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write(",".join(cols) + "\n")
            np.savetxt(fh, rows, delimiter=",", fmt="%.17g")


# ---------------------------------------------------------------------------
# energies


def energy(f: G.Field, order: int, delta: float = 1.0, tol: float = 1e-10) -> float:
    """Conserved energies ``E0``, ``E1``, ``E2`` by spectral quadrature.

    ``T^{-1} phi_x`` is the multiplier ``-xi coth(delta xi)``; with this sign
    ``E1`` is conserved along the flow.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    phi = f.values.real
    dx = f.grid.dx
    if order == 0:
        return float(0.5 * dx * np.sum(phi**2))
    scale = max(np.sqrt(np.mean(phi**2)), 1e-300)
    if abs(phi.mean()) > tol * scale:
        raise ValueError("E1 and E2 need a mean-zero field")
    K = G.tilbert_inv_dx(f, delta).values.real
    if order == 1:
        return float(dx * np.sum(phi * K - phi**3 / 3.0))
    px = G.derivative(f).values.real
    return float(dx * np.sum(0.5 * px**2 - 1.5 * phi**2 * K + 0.25 * phi**4 + 1.5 * K**2))


def _diagnostics(f: G.Field, delta: float) -> dict:
    return {
        "E0": energy(f, 0, delta),
        "E1": energy(f, 1, delta),
        "E2": energy(f, 2, delta),
        "Linf": float(np.abs(f.values).max()),
        "besov": G.norm_besov(f),
        "tilbert_half": G.norm_tilbert_half(f, delta),
    }


# ---------------------------------------------------------------------------
# stepping


class Stepper:
    """Krogstad ETDRK4 on the rfft coefficients of a real field."""

    def __init__(self, grid: G.GridSpec, dt: float, model: str = "ilw-transport", delta: float = 1.0, dealias: bool = True):
        self.grid, self.dt, self.model, self.delta, self.dealias = grid, dt, model, delta, dealias
        n = grid.n
        self.k = 2.0 * np.pi * np.fft.rfftfreq(n, d=grid.dx)
        w = np.asarray(phase(model, delta)(self.k), dtype=float)
        w[0] = 0.0
        Lh = 1j * w * dt
        self.E = np.exp(Lh)
        self.E2 = np.exp(Lh / 2.0)
        p1h, p2h, _ = phi_functions(Lh / 2.0)
        p1, p2, p3 = phi_functions(Lh)
        h = dt
        self.a1 = 0.5 * h * p1h
        self.b2 = h * p2h
        self.c1 = h * p1
        self.c2 = 2.0 * h * p2
        self.f1 = h * (p1 - 3.0 * p2 + 4.0 * p3)
        self.f2 = h * (2.0 * p2 - 4.0 * p3)
        self.f3 = h * (4.0 * p3 - p2)
        self.ik2 = 0.5j * self.k
        self.ik2[-1] = 0.0  # Nyquist
        self.M = 3 * n // 2

    def nonlinear(self, vh):
        """Fourier coefficients of ``(phi^2)_x / 2`` (rfft scaling)."""
        n = self.grid.n
        if self.dealias:
            M = self.M
            p = np.zeros(M // 2 + 1, complex)
            p[: n // 2] = vh[: n // 2]
            u = np.fft.irfft(p, M)
            w = np.fft.rfft(u * u)[: n // 2 + 1] * (M / n)
        else:
            u = np.fft.irfft(vh, n)
            w = np.fft.rfft(u * u)
        return self.ik2 * w

    def step(self, vh):
        N = self.nonlinear
        Nu = N(vh)
        base2 = self.E2 * vh + self.a1 * Nu
        a = base2
        Na = N(a)
        b = base2 + self.b2 * (Na - Nu)
        Nb = N(b)
        c = self.E * vh + self.c1 * Nu + self.c2 * (Nb - Nu)
        Nc = N(c)
        out = self.E * vh + self.f1 * Nu + self.f2 * (Na + Nb) + self.f3 * Nc
        out[-1] = 0.0
        return out

    def to_hat(self, f: G.Field):
        vh = np.fft.rfft(f.values.real)
        vh[-1] = 0.0
        return vh

    def to_field(self, vh):
        return G.Field(self.grid, np.fft.irfft(vh, self.grid.n))


def step_etdrk4(state: G.Field, dt: float, model: str = "ilw-transport", delta: float = 1.0, dealias: bool = True) -> G.Field:
    """One Krogstad ETDRK4 step; aborts if the sup norm grows tenfold."""
    st = Stepper(state.grid, dt, model, delta, dealias)
    out = st.to_field(st.step(st.to_hat(state)))
    _guard(state, out, dt)
    return out


def _guard(before, after, t):
    a = float(np.abs(before.values).max())
    b = float(np.abs(after.values).max())
    if not np.isfinite(b) or (a > 0 and b > 10.0 * a):
        raise NumericalGuardError("instability: sup norm grew by more than 10x in one step", t)


def cfl_number(f: G.Field, dt: float) -> float:
    """``dt max|xi| ||phi||_inf``; the linear part is exact, so only advection limits dt."""
    return float(dt * f.grid.xi_max * np.abs(f.values).max())


def evolve(config: SimConfig, datum: G.Field | None = None, record: list | None = None) -> SimTrace:
    """Integrate to ``t_end`` and return snapshots every ``cadence`` steps.

    ``record`` optionally lists extra step indices to snapshot.
    """
    g = config.grid
    u0 = datum if datum is not None else config.datum.build(g)
    scale = max(np.sqrt(np.mean(u0.values.real**2)), 1e-300)
    if abs(u0.values.real.mean()) > 1e-10 * scale:
        raise ValueError("initial datum must have zero mean")
    c = cfl_number(u0, config.dt)
    if c > config.cfl:
        raise NumericalGuardError(f"CFL guard: dt max|xi| |phi|_inf = {c:.3g} exceeds {config.cfl}", 0.0)
    st = Stepper(g, config.dt, config.model, config.delta, config.dealias)
    log.debug("evolve %s: %d steps of dt=%g on n=%d", config.model, config.n_steps, config.dt, g.n)
    vh = st.to_hat(u0)
    want = set(range(0, config.n_steps + 1, config.cadence)) | {config.n_steps}
    if record:
        want |= {int(i) for i in record if 0 <= i <= config.n_steps}
    times, fields, diags = [], [], {}

    def snap(i, f):
        times.append(i * config.dt)
        fields.append(f)
        if config.diagnostics:
            for k, v in _diagnostics(f, config.delta).items():
                diags.setdefault(k, []).append(v)

    prev_sup = float(np.abs(u0.values).max())
    snap(0, u0)
    for i in range(1, config.n_steps + 1):
        vh = st.step(vh)
        if i in want or i % 50 == 0:
            f = st.to_field(vh)
            sup = float(np.abs(f.values).max())
            if not np.isfinite(sup) or (prev_sup > 0 and sup > 10.0 * prev_sup):
                raise NumericalGuardError("instability: sup norm grew by more than 10x", i * config.dt)
            prev_sup = sup
            if i in want:
                snap(i, f)
        elif not np.isfinite(vh[1]):
            raise NumericalGuardError("non-finite state", i * config.dt)
    return SimTrace(np.array(times), fields, {k: np.array(v) for k, v in diags.items()}, config.dt, config)


def reflect(f: G.Field) -> G.Field:
    """``x -> -x`` about the grid centre; maps solutions to time-reversed solutions."""
    g = f.grid
    if not np.isclose(g.x_min, -g.L / 2.0):
        raise ValueError("reflection needs a grid centred at 0")
    return G.Field(g, np.roll(f.values[::-1], 1))


def rescale_delta(f: G.Field, delta: float, n_target: int | None = None) -> G.Field:
    """``delta * u(delta x)`` on the grid scaled by ``1/delta``.

    With ``v(t, x) = delta u(delta^2 t, delta x)`` this maps depth-``delta``
    solutions to depth-1 solutions.  Sampling is exact; ``n_target`` resamples
    spectrally and warns when the result is under-resolved.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    g = f.grid
    ng = G.GridSpec(g.L / delta, g.n, g.x_min / delta)
    out = G.Field(ng, delta * f.values)
    if n_target is None or n_target == g.n:
        return out
    tg = G.GridSpec(ng.L, n_target, ng.x_min)
    c = out.spectrum()
    m = np.fft.fftfreq(g.n, 1.0 / g.n).astype(int)
    keep = (m >= -(n_target // 2)) & (m < n_target // 2)
    cc = np.zeros(n_target, complex)
    cc[m[keep] % n_target] = c[keep]
    top = np.abs(m) > n_target // 3
    frac = np.sum(np.abs(c[top & keep]) ** 2) / max(np.sum(np.abs(c) ** 2), 1e-300)
    lost = np.sum(np.abs(c[~keep]) ** 2) / max(np.sum(np.abs(c) ** 2), 1e-300)
    if frac + lost > 1e-12:
        warnings.warn(f"rescale_delta: {frac + lost:.2e} of the energy sits in the top spectral third", RuntimeWarning)
    return G.Field.from_spectrum(tg, cc, real=f.is_real)
