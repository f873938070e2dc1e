"""Quadratic normal-form symbols for ILW and their Benjamin-Ono limits.

All two-frequency symbols are functions of ``(xi, eta)`` with the third
frequency ``zeta = -xi - eta`` implied.  Bilinear forms follow
``B(e^{i xi x}, e^{i eta x}) = b(xi, eta) e^{i(xi+eta)x}``.

The corrected vector field is ``v = L u + t B(u, u)`` and satisfies

    (d/dt - i A(D)) v = C(u, v) + t R(u, u, u) + D(u, u)

with ``c = i eta - 2i c~a``, ``b = b1/2 + b2`` and ``d = b - 1 + (d_eta - d_xi) c~a``.

Symbols scale as ``b_delta(xi, eta) = b_1(delta xi, delta eta)`` and
``c~a_delta = c~a_1(delta xi, delta eta) / delta``, so only the
``delta = 1`` kernels are implemented.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import symbols as S

__all__ = [
    "NormalForm",
    "SymbolGrid",
    "IdentityCheck",
    "IdentityReport",
    "symbol_b1",
    "symbol_ctilde_a",
    "symbol_c",
    "symbol_c_sym3",
    "c_sym3_closed",
    "symbol_b2",
    "symbol_b",
    "symbol_b_sharp",
    "symbol_b_residual",
    "symbol_G",
    "symbol_d",
    "symbol_r",
    "bo_symbols",
    "b_bo",
    "ctilde_bo",
    "c_bo",
    "d_bo",
    "apply_R",
    "verify_quadratic_identity",
    "decay_ladder",
    "resolve_d_sign",
]


def _f(v):
    return np.asarray(v, dtype=float)


def _ctilde_core(x, y, sig):
    s = x + y
    return -0.25 * x * sig(y) * (sig(s) - sig(x)) + 0.25 * y * sig(x) * (sig(s) - sig(y))


def _ctilde_over_xy(x, y):
    # c~a / (x y), finite on both axes
    s = x + y
    tx, ty, ts = np.tanh(x), np.tanh(y), np.tanh(s)
    return -0.25 * S.tanh_over_x(y) * (ts - tx) + 0.25 * S.tanh_over_x(x) * (ts - ty)


def _ddiff_ctilde(x, y, sig, dsig):
    """``(d_eta - d_xi) c~a`` at delta = 1."""
    s = x + y
    sx, sy, ss = sig(x), sig(y), sig(s)
    dx, dy = dsig(x), dsig(y)
    return 0.25 * (
        sx * (ss - sy) + sy * (ss - sx)
        - y * (sx * dy + dx * (ss - sy))
        - x * (sy * dx + dy * (ss - sx))
    )


def _sech2(y):
    return 1.0 / np.cosh(np.minimum(np.abs(y), 700.0)) ** 2


# ---------------------------------------------------------------------------
# ILW symbols


def symbol_b1(xi, eta, delta: float = 1.0):
    """``(s a'(s) - xi a'(xi) - eta a'(eta)) / Omega``, ``s = xi + eta``; 3 at 0, 2 at infinity."""
    x, y = delta * _f(xi), delta * _f(eta)
    return S.triple_quotient("h", x, y) / S.triple_quotient("A", x, y)


def symbol_ctilde_a(xi, eta, delta: float = 1.0):
    """Real, odd, antisymmetric ``c~a``; vanishes on both axes."""
    x, y = delta * _f(xi), delta * _f(eta)
    return _ctilde_core(x, y, np.tanh) / delta


def symbol_c(xi, eta, delta: float = 1.0):
    return 1j * _f(eta) - 2j * symbol_ctilde_a(xi, eta, delta)


def c_sym3_closed(xi, eta, delta: float = 1.0):
    """``-i xi sech^2 sech^2 / (1 + tanh tanh)`` written as ``-i xi / (cosh cosh cosh)``."""
    x, y = delta * _f(xi), delta * _f(eta)
    ch = lambda v: np.cosh(np.minimum(np.abs(v), 700.0))
    return -1j * _f(xi) / (ch(x) * ch(y) * ch(x + y))


def symbol_c_sym3(xi, eta, delta: float = 1.0, direct: bool = False):
    """``c(xi, eta) + c(xi, -xi-eta)``.

    The literal sum loses all relative accuracy once the result drops below
    rounding of ``c`` itself, so by default the algebraically equal product
    form is returned; ``direct=True`` gives the literal sum.
    """
    if direct:
        xi, eta = _f(xi), _f(eta)
        return symbol_c(xi, eta, delta) + symbol_c(xi, -xi - eta, delta)
    return c_sym3_closed(xi, eta, delta)


def symbol_b2(xi, eta, delta: float = 1.0):
    """``c~a (a'(eta) - a'(xi)) / Omega`` with the division done factor by factor."""
    x, y = delta * _f(xi), delta * _f(eta)
    return _ctilde_over_xy(x, y) * S.dA_difference_quotient(x, y) / S.triple_quotient("A", x, y)


def symbol_b(xi, eta, delta: float = 1.0, b2_sign: float = 1.0):
    return 0.5 * symbol_b1(xi, eta, delta) + b2_sign * symbol_b2(xi, eta, delta)


def symbol_b_sharp(xi, eta, delta: float = 1.0):
    return 0.75 + 0.25 * np.tanh(delta * _f(xi)) * np.tanh(delta * _f(eta))


def symbol_b_residual(xi, eta, delta: float = 1.0):
    return symbol_b(xi, eta, delta) - symbol_b_sharp(xi, eta, delta)


def symbol_G(xi, eta, delta: float = 1.0):
    x, y = delta * _f(xi), delta * _f(eta)
    tx, ty, ts = np.tanh(x), np.tanh(y), np.tanh(x + y)
    return ts * tx + ts * ty - tx * ty + 1.0


def symbol_d(xi, eta, delta: float = 1.0, d_sign: float = 1.0, b2_sign: float = 1.0):
    """``b - 1 + d_sign * (d_eta - d_xi) c~a``; decays like ``exp(-c xi_lo)``."""
    x, y = delta * _f(xi), delta * _f(eta)
    dd = _ddiff_ctilde(x, y, np.tanh, _sech2)
    return symbol_b(xi, eta, delta, b2_sign) - 1.0 + d_sign * dd


def symbol_r(xi, eta, zeta, delta: float = 1.0, kind: str = "ilw"):
    """Symmetrised symbol of ``2B(u, u u_x) - C(u, B(u, u))``."""
    nf = NormalForm(delta=delta, kind=kind)
    xi, eta, zeta = np.broadcast_arrays(_f(xi), _f(eta), _f(zeta))
    out = np.zeros(xi.shape, dtype=complex)
    for p, q, r in permutations((xi, eta, zeta)):
        qr = q + r
        out += 1j * qr * nf.b(p, qr) - nf.c(p, qr) * nf.b(q, r)
    return out / 6.0


# ---------------------------------------------------------------------------
# Benjamin-Ono limits


def b_bo(xi, eta):
    return 0.75 + 0.25 * np.sign(_f(xi)) * np.sign(_f(eta))


def ctilde_bo(xi, eta):
    return _ctilde_core(_f(xi), _f(eta), np.sign)


def c_bo(xi, eta):
    return 1j * _f(eta) - 2j * ctilde_bo(xi, eta)


def d_bo(xi, eta):
    x, y = _f(xi), _f(eta)
    return b_bo(x, y) - 1.0 + _ddiff_ctilde(x, y, np.sign, np.zeros_like)


def bo_symbols(xi, eta):
    """``(b_BO, c~a_BO, c_BO)``; points on the coordinate axes are rejected."""
    xi, eta = _f(xi), _f(eta)
    if np.any(xi == 0) or np.any(eta == 0):
        raise ValueError("BO symbols are undefined on the axes xi = 0, eta = 0")
    return b_bo(xi, eta), ctilde_bo(xi, eta), c_bo(xi, eta)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalForm:
    """Bundle of the symbols ``b, c, d`` used by the v-equation.

    ``kind='bo'`` swaps in the sgn surrogates.  ``b2_sign`` and ``d_sign``
    exist for fault injection only.
    """

    delta: float = 1.0
    kind: str = "ilw"
    b2_sign: float = 1.0
    d_sign: float = 1.0

    def __post_init__(self):
        if self.kind not in ("ilw", "bo"):
            raise ValueError(f"unknown kind {self.kind!r}")

    def b(self, xi, eta):
        if self.kind == "bo":
            return b_bo(xi, eta)
        return symbol_b(xi, eta, self.delta, self.b2_sign)

    def c(self, xi, eta):
        if self.kind == "bo":
            return c_bo(xi, eta)
        return symbol_c(xi, eta, self.delta)

    def d(self, xi, eta):
        if self.kind == "bo":
            x, y = _f(xi), _f(eta)
            return b_bo(x, y) - 1.0 + self.d_sign * _ddiff_ctilde(x, y, np.sign, np.zeros_like)
        return symbol_d(xi, eta, self.delta, self.d_sign, self.b2_sign)

    @property
    def key(self):
        return ("nf", self.delta, self.kind, self.b2_sign, self.d_sign)


def apply_R(u, nf: NormalForm | None = None, threshold: float = 1e-15):
    """``2 B(u, u u_x) - C(u, B(u, u))`` by composed bilinear applications."""
    from .grid import bilinear_apply, dealiased_product, derivative

    nf = nf or NormalForm()
    w = bilinear_apply(nf.b, u, u, key=nf.key + ("b",), threshold=threshold)
    uux = dealiased_product(u, derivative(u))
    return 2.0 * bilinear_apply(nf.b, u, uux, key=nf.key + ("b",), threshold=threshold) - bilinear_apply(
        nf.c, u, w, key=nf.key + ("c",), threshold=threshold
    )


# ---------------------------------------------------------------------------
# lattices and verifiers


@dataclass
class SymbolGrid:
    """Symmetric ``n x n`` lattice on ``[-bound, bound]^2`` with a value cache.

    The nodes are ``h (j - (n-1)/2)`` so the lattice is exactly invariant
    under ``(xi, eta) -> (eta, xi)`` and ``-> (-xi, -eta)``.
    """

    n: int = 400
    bound: float = 25.0
    delta: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        h = 2.0 * self.bound / (self.n - 1)
        self.nodes = h * (np.arange(self.n) - (self.n - 1) / 2.0)
        self.xi, self.eta = np.meshgrid(self.nodes, self.nodes, indexing="ij")
        self.zeta = -self.xi - self.eta

    @property
    def xi_hi(self):
        return np.maximum(np.maximum(np.abs(self.xi), np.abs(self.eta)), np.abs(self.zeta))

    @property
    def xi_lo(self):
        return np.minimum(np.minimum(np.abs(self.xi), np.abs(self.eta)), np.abs(self.zeta))

    def in_band(self, width: float = S.TAU_DIV):
        return self.delta * self.xi_lo < width

    def value(self, name: str, fn=None):
        if name not in self._cache:
            fn = fn or globals()[f"symbol_{name}"]
            self._cache[name] = fn(self.xi, self.eta, self.delta)
        return self._cache[name]

    def to_csv(self, name: str, path, header_comment: str | None = None):
        v = np.asarray(self.value(name), dtype=complex)
        rows = np.column_stack([self.xi.ravel(), self.eta.ravel(), v.real.ravel(), v.imag.ravel()])
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("xi,eta,value_re,value_im\n")
            np.savetxt(fh, rows, delimiter=",", fmt="%.17g")


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    max_err: float
    max_err_band: float
    worst: tuple
    tol: float
    tol_band: float

    @property
    def passed(self) -> bool:
        return bool(self.max_err <= self.tol and self.max_err_band <= self.tol_band)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (
            f"{flag} {self.name}: max={self.max_err:.3e} (tol {self.tol:g}), "
            f"band max={self.max_err_band:.3e} (tol {self.tol_band:g}), worst at "
            f"xi={self.worst[0]:.6g}, eta={self.worst[1]:.6g}"
        )


@dataclass(frozen=True)
class IdentityReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def text(self) -> str:
        return "\n".join(c.line() for c in self.checks)


def _check(name, err, grid, band, tol=1e-10, tol_band=1e-6):
    err = np.abs(np.asarray(err))
    err = np.where(np.isfinite(err), err, np.inf)
    off = np.where(band, 0.0, err)
    on = np.where(band, err, 0.0)
    idx = np.unravel_index(np.argmax(np.maximum(off / tol, on / tol_band)), err.shape)
    return IdentityCheck(
        name, float(off.max()), float(on.max()), (float(grid.xi[idx]), float(grid.eta[idx])), tol, tol_band
    )


def _complex_step_deta(fn, xi, eta, h=1e-30):
    return np.imag(fn(xi + 0j, eta + 1j * h)) / h


def verify_quadratic_identity(
    grid: SymbolGrid | None = None,
    kind: str = "ilw",
    nf: NormalForm | None = None,
    tol: float = 1e-10,
    tol_band: float = 1e-6,
) -> IdentityReport:
    """Check the symbol identities behind the v-equation on a lattice.

    * ``tanh-triple``: ``s(xi+eta) s(xi) s(eta) = s(xi) + s(eta) - s(xi+eta)``
    * ``first-C``: ``c(xi, eta) + c(eta, xi) = i (xi + eta)``
    * ``c-sym3``: literal ``c(xi,eta) + c(xi,zeta)`` against the closed form
    * ``second-C``: ``b Omega = N1/2 + c~a (a'(eta) - a'(xi))``
    * ``first-C+``: ``d = sym(b + i d_eta c)`` with ``d_eta`` by complex step

    Errors are scaled by ``1 + |terms|``.  ``kind='bo'`` runs the analogous
    checks with sgn surrogates and ``Omega = s|s| - xi|xi| - eta|eta|``.
    """
    grid = grid or SymbolGrid()
    nf = nf or NormalForm(delta=grid.delta, kind=kind)
    dl = grid.delta
    xi, eta = grid.xi, grid.eta
    s = xi + eta
    band = grid.in_band()
    checks = []

    if kind == "ilw":
        tx, ty, ts = np.tanh(dl * xi), np.tanh(dl * eta), np.tanh(dl * s)
        checks.append(_check("tanh-triple", ts * tx * ty - (tx + ty - ts), grid, band, tol, tol_band))

    c1, c2 = nf.c(xi, eta), nf.c(eta, xi)
    checks.append(
        _check("first-C", (c1 + c2 - 1j * s) / (1.0 + np.abs(c1) + np.abs(c2)), grid, band, tol, tol_band)
    )

    if kind == "ilw":
        lit = symbol_c_sym3(xi, eta, dl, direct=True)
        checks.append(_check("c-sym3", (lit - c_sym3_closed(xi, eta, dl)) / (1.0 + np.abs(xi)), grid, band, tol, tol_band))
        a = lambda v: S.dispersion_a(v, dl)
        da = lambda v: S.group_velocity(v, dl)
        ct = symbol_ctilde_a(xi, eta, dl)
    else:
        a = lambda v: v * np.abs(v)
        da = lambda v: 2.0 * np.abs(v)
        ct = ctilde_bo(xi, eta)
        checks.append(_check("c-sym3", (nf.c(xi, eta) + nf.c(xi, -s)) / (1.0 + np.abs(xi)), grid, band, tol, tol_band))

    omega = a(s) - a(xi) - a(eta)
    n1 = s * da(s) - xi * da(xi) - eta * da(eta)
    lhs = nf.b(xi, eta) * omega
    rhs = 0.5 * n1 + ct * (da(eta) - da(xi))
    scale = 1.0 + np.abs(0.5 * n1) + np.abs(ct * (da(eta) - da(xi))) + np.abs(lhs)
    checks.append(_check("second-C", (lhs - rhs) / scale, grid, band, tol, tol_band))

    if kind == "ilw":
        dc = lambda p, q: _complex_step_deta(lambda u, w: _ctilde_core(dl * u, dl * w, np.tanh) / dl, p, q)
        # i d_eta c = i (i - 2i d_eta c~a) = -1 + 2 d_eta c~a
        dsym = nf.b(xi, eta) - 1.0 + (dc(xi, eta) + dc(eta, xi))
    else:
        # c~a_BO is piecewise linear; a centred difference is exact off the kinks
        h = 1e-3
        dc = lambda p, q: (ctilde_bo(p, q + h) - ctilde_bo(p, q - h)) / (2 * h)
        dsym = nf.b(xi, eta) - 1.0 + (dc(xi, eta) + dc(eta, xi))
        band = band | (grid.xi_lo < 2 * h)
    d = nf.d(xi, eta)
    checks.append(_check("first-C+", (d - dsym) / (1.0 + np.abs(d)), grid, band, tol, tol_band))
    return IdentityReport(tuple(checks))


def resolve_d_sign(n: int = 201, bound: float = 30.0, delta: float = 1.0) -> float:
    """Pick the sign in ``d`` for which ``exp(xi_lo) |d|`` stays bounded.

    Returns +1 or -1; the wrong sign leaves an O(1) residual at large
    ``xi_lo`` so the weighted supremum is many orders larger.
    """
    g = SymbolGrid(n, bound, delta)
    w = np.exp(delta * g.xi_lo)
    sups = {sg: float(np.max(w * np.abs(symbol_d(g.xi, g.eta, delta, sg)))) for sg in (1.0, -1.0)}
    return min(sups, key=sups.get)


def decay_ladder(n: int = 400, bound: float = 25.0, n3: int = 40, bound3: float = 15.0, delta: float = 1.0) -> dict:
    """Measured suprema of the four decay-weighted symbols.

    ``c_sym3``: ``|c_sym3| e^{xi_hi} / (1 + xi_hi)``; ``b_r``: ``(1 + xi_hi) e^{xi_lo} |b^r|``;
    ``d``: ``e^{xi_lo} |d|``; ``r``: ``|r| / (|s(xi)| + |s(eta)| + |s(zeta)|)`` on a 3D lattice.
    """
    g = SymbolGrid(n, bound, delta)
    hi, lo = delta * g.xi_hi, delta * g.xi_lo
    out = {
        "c_sym3": float(np.max(np.abs(g.value("c_sym3")) * np.exp(hi) / (1.0 + hi))),
        "b_r": float(np.max((1.0 + hi) * np.exp(lo) * np.abs(g.value("b_residual")))),
        "d": float(np.max(np.exp(lo) * np.abs(g.value("d")))),
    }
    h = 2.0 * bound3 / (n3 - 1)
    nodes = h * (np.arange(n3) - (n3 - 1) / 2.0)
    X, Y, Z = np.meshgrid(nodes, nodes, nodes, indexing="ij")
    r = symbol_r(X, Y, Z, delta)
    den = np.abs(np.tanh(delta * X)) + np.abs(np.tanh(delta * Y)) + np.abs(np.tanh(delta * Z))
    out["r"] = float(np.max(np.abs(r) / den))
    return out
