"""Nonlinear vector field ``v = L u + t B(u, u)``, its equation, and decay tracking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid as G
from . import linear_dispersion as LD
from .normal_form import NormalForm, apply_R


def build_v(
    u: G.Field,
    t: float,
    nf: NormalForm | None = None,
    frame: str = "transport",
    x0: float = 0.0,
    guard: bool = True,
    threshold: float = 1e-15,
) -> G.Field:
    """``L u + t B(u, u)`` with ``b`` from the normal form.

    ``threshold`` is the relative coefficient cut of the bilinear sums.
    """
    nf = nf or NormalForm()
    Lu = LD.vectorfield_L(u, t, nf.delta, frame, x0, guard)
    if t == 0:
        return Lu
    return Lu + t * G.bilinear_apply(nf.b, u, u, key=nf.key + ("b",), threshold=threshold)


def v_rhs(u: G.Field, v: G.Field, t: float, nf: NormalForm | None = None, threshold: float = 1e-15) -> G.Field:
    """``C(u, v) + t R(u, u, u) + D(u, u)``."""
    nf = nf or NormalForm()
    out = G.bilinear_apply(nf.c, u, v, key=nf.key + ("c",), threshold=threshold)
    out = out + G.bilinear_apply(nf.d, u, u, key=nf.key + ("d",), threshold=threshold)
    if t != 0:
        out = out + t * apply_R(u, nf, threshold)
    return out


@dataclass(frozen=True)
class ResidualSeries:
    times: np.ndarray
    residual: np.ndarray
    v_norm: np.ndarray

    @property
    def relative(self) -> np.ndarray:
        return self.residual / self.v_norm


def v_equation_residual(
    trace,
    nf: NormalForm | None = None,
    frame: str = "transport",
    x0: float = 0.0,
    stride: int = 1,
    threshold: float = 1e-15,
) -> ResidualSeries:
    """``|| (d_t - i A(D)) v - C(u, v) - t R - D ||_{L^2}`` along a trace.

    ``(d_t - iA) v = e^{itA} d_t (e^{-itA} v)``; the derivative of the slowly
    varying profile ``e^{-itA} v`` is taken by the 4th-order centred
    difference on the uniform snapshot cadence.  ``stride`` thins the
    evaluation times.
    """
    nf = nf or NormalForm()
    t = np.asarray(trace.times)
    if t.size < 5:
        raise ValueError("need at least five snapshots for the difference stencil")
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("snapshot cadence must be uniform")
    h = h[0]
    A, _ = LD._phase(frame, nf.delta)
    vs = {}

    def profile(i):
        if i not in vs:
            v = build_v(trace.fields[i], t[i], nf, frame, x0, threshold=threshold)
            vs[i] = (v, G.propagate(v, -t[i], A))
        return vs[i]

    times, res, vn = [], [], []
    for i in range(2, t.size - 2, stride):
        w = [profile(i + k)[1] for k in (-2, -1, 1, 2)]
        dw = (w[0] - 8.0 * w[1] + 8.0 * w[2] - w[3]) / (12.0 * h)
        Pv = G.propagate(dw, t[i], A)
        v = profile(i)[0]
        r = Pv - v_rhs(trace.fields[i], v, t[i], nf, threshold)
        times.append(t[i])
        res.append(G.norm_l2(r))
        vn.append(G.norm_l2(v))
        for k in [k for k in vs if k < i - 1]:
            del vs[k]
    return ResidualSeries(np.array(times), np.array(res), np.array(vn))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayReport:
    times: np.ndarray
    columns: dict
    dyadic: dict

    def __getitem__(self, k):
        return self.columns[k]

    def to_csv(self, path, header_comment=None):
        names = list(self.columns)
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write(",".join(["t"] + names) + "\n")
            rows = np.column_stack([self.times] + [self.columns[k] for k in names])
            np.savetxt(fh, rows, delimiter=",", fmt="%.17g")


def dyadic_sups(u: G.Field, t: float, k_max: int = -1) -> dict:
    """``2^{k/2} t^{1/2} ||P_k u||_inf`` for the representable ``k <= k_max`` (exact shells)."""
    lo, _ = G.shell_range(u.grid, "exact")
    return {k: float(2.0 ** (k / 2.0) * np.sqrt(t) * np.abs(G.lp_project(u, k).values).max()) for k in range(lo, k_max + 1)}


def track_decay(
    trace,
    eps: float,
    nf: NormalForm | None = None,
    frame: str = "transport",
    x0: float = 0.0,
    kappa: float = LD.KAPPA,
    t_min: float = 0.0,
    threshold: float = 1e-10,
) -> DecayReport:
    """Norms and pointwise-decay ratios along a small-data trace.

    Columns: ``tilbert_half_v`` (``|| |T|^{1/2} v ||``), ``besov_u``,
    ``sup_u_omega0`` (``sup |u|/omega_0``), ``sup_Tu_omega1``,
    ``dyadic_max`` (``max_k 2^{k/2} t^{1/2} ||u_k||_inf / eps``) and
    ``besov_rate`` (``max_k |d/dt ||u_k||^2| / (eps^3 2^{3k/2} t^{-1/2} |k|)``).
    The bilinear correction drops coefficients below ``threshold`` times the
    largest; the default keeps ``v`` accurate to about that relative level
    while bounding the lattice block of wide nonlinear spectra.
    """
    nf = nf or NormalForm()
    sel = [i for i, tt in enumerate(trace.times) if tt > t_min and tt > 0]
    times = np.asarray(trace.times)[sel]
    cols = {k: [] for k in ("tilbert_half_v", "besov_u", "sup_u_omega0", "sup_Tu_omega1", "dyadic_max")}
    dy = {}
    shell_l2 = []
    for i in sel:
        u, t = trace.fields[i], float(trace.times[i])
        x = u.grid.x - x0
        v = build_v(u, t, nf, frame, x0, threshold=threshold)
        cols["tilbert_half_v"].append(G.norm_tilbert_half(v, nf.delta))
        cols["besov_u"].append(G.norm_besov(u))
        cols["sup_u_omega0"].append(float(np.max(np.abs(u.values) / LD.weight_omega(t, x, 0, kappa))))
        Tu = G.tilbert(u, nf.delta)
        cols["sup_Tu_omega1"].append(float(np.max(np.abs(Tu.values) / LD.weight_omega(t, x, 1, kappa))))
        ds = dyadic_sups(u, t)
        dy[t] = ds
        cols["dyadic_max"].append(max(ds.values()) / eps)
        shell_l2.append({k: v_ ** 2 for k, v_ in G.dyadic_norms(u).items() if k < 0})
    rate = np.full(len(sel), np.nan)
    for m in range(1, len(sel) - 1):
        dt = times[m + 1] - times[m - 1]
        t = times[m]
        best = 0.0
        for k in shell_l2[m]:
            d = (shell_l2[m + 1][k] - shell_l2[m - 1][k]) / dt
            bound = eps**3 * 2.0 ** (1.5 * k) * t ** -0.5 * abs(k)
            best = max(best, abs(d) / bound)
        rate[m] = best
    out = {k: np.array(v) for k, v in cols.items()}
    out["besov_rate"] = rate
    return DecayReport(times, out, dy)
