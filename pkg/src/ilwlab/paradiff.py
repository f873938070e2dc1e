"""Dyadic normal form ``B_k``, the primitive ``Phi`` and the gauged variable ``psi_k^+``.

Projections use the smooth Littlewood-Paley pieces by default; ``mode``
switches to sharp shells.  ``P_k^+`` keeps the positive frequencies of
shell ``k``.  Products go through the 3/2-padded product, the gauge factor
``exp(-i Phi_{<k})`` is applied pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid as G


def _index(k) -> G.DyadicIndex:
    if isinstance(k, G.DyadicIndex):
        return k if k.sign is not None else G.DyadicIndex(k.k, 1)
    return G.DyadicIndex(int(k), 1)


def _check(f: G.Field, k: G.DyadicIndex, mode: str):
    lo, hi = G.shell_range(f.grid, mode)
    if k.k < lo:
        raise ValueError(f"shell k={k.k} lies below the lattice range [{lo}, {hi}]")
    if k.k > hi:
        raise ValueError(f"shell k={k.k} lies above the lattice range [{lo}, {hi}]")


def _require_mean_zero(f: G.Field, tol: float = 1e-12):
    scale = max(float(np.abs(f.values).max()), 1e-300)
    if abs(complex(f.values.mean())) > tol * scale:
        raise ValueError("field must have zero mean")


def primitive_Phi(phi: G.Field) -> G.Field:
    """Mean-zero ``Phi`` with ``Phi_x = phi / 2``."""
    _require_mean_zero(phi)
    return 0.5 * G.antiderivative(phi)


def _PH(f, k, mode):
    return G.lp_project(G.hilbert(f), k, mode)


def _low_primitive(f, k, mode):
    # d_x^{-1} P_{<k} f as one multiplier; the mean of f is dropped
    return G.apply_multiplier(f, lambda xi: G.lp_low_symbol(xi, k, mode) / (1j * xi), at_zero=0.0)


def commutator_term(f: G.Field, g: G.Field, k, mode: str = "smooth") -> G.Field:
    """``[P_k^+ H, d_x^{-1} f_{<k}] g``."""
    k = _index(k)
    w = _low_primitive(f, k.k, mode)
    return _PH(G.dealiased_product(w, g), k, mode) - G.dealiased_product(w, _PH(g, k, mode))


def nf_Bk_bilinear(f: G.Field, g: G.Field, k, mode: str = "smooth") -> G.Field:
    """Bilinear ``B_k(f, g)``; the primitive falls on ``f``."""
    k = _index(k)
    _check(f, k, mode)
    _require_mean_zero(f)
    W = G.antiderivative(G.lp_high(f, k.k, mode))
    t1 = commutator_term(f, g, k, mode)
    t2 = G.lp_project(G.dealiased_product(G.hilbert(g), W), k, mode)
    t3 = _PH(G.dealiased_product(g, W), k, mode)
    return -0.5 * t1 - 0.25 * t2 - 0.25 * t3


def nf_Bk(phi: G.Field, k, mode: str = "smooth") -> G.Field:
    """``B_k(phi, phi)``: the dyadic quadratic correction at shell ``k``."""
    return nf_Bk_bilinear(phi, phi, k, mode)


def gauge_psi_k(phi: G.Field, k, mode: str = "smooth") -> G.Field:
    """``(P_k^+ phi + B_k) exp(-i Phi_{<k})``."""
    k = _index(k)
    low = G.lp_low(primitive_Phi(phi), k.k, mode).values.real
    core = G.lp_project(phi, k, mode) + nf_Bk(phi, k, mode)
    return G.Field(phi.grid, core.values * np.exp(-1j * low))


def quadratic_expansion(phi: G.Field, k, mode: str = "smooth") -> G.Field:
    """``phi_k^+ + B_k - i Phi_{<k} phi_k^+``, the gauge to second order."""
    k = _index(k)
    low = G.lp_low(primitive_Phi(phi), k.k, mode)
    pk = G.lp_project(phi, k, mode)
    return pk + nf_Bk(phi, k, mode) - 1j * (low * pk)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class ShellConstants:
    ks: np.ndarray
    bk: np.ndarray
    commutator: np.ndarray
    envelope: np.ndarray

    def to_csv(self, path, header_comment=None):
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("k,bk_constant,commutator_gain,envelope_ratio\n")
            rows = np.column_stack([self.ks, self.bk, self.commutator, self.envelope])
            np.savetxt(fh, rows, delimiter=",", fmt="%.17g")


def bk_constant(phi: G.Field, k, mode: str = "smooth") -> float:
    """``||B_k(phi)|| / (||phi|| ||phi||_inf)``."""
    b = nf_Bk(phi, k, mode)
    return G.norm_l2(b) / (G.norm_l2(phi) * float(np.abs(phi.values).max()))


def commutator_gain(phi: G.Field, k, mode: str = "smooth") -> float:
    """``||[P_k^+ H, d^{-1} phi_{<k}] phi|| / (2^{-k} ||d_x phi_{<k}||_inf ||phi_{<k+2}||)``.

    Only ``|xi| < 2^{k+2}`` of the right factor reaches the output, so that is
    the norm in the denominator.
    """
    k = _index(k)
    num = G.norm_l2(commutator_term(phi, phi, k, mode))
    dlow = float(np.abs(G.derivative(G.lp_low(phi, k.k, mode)).values).max())
    pk = G.norm_l2(G.lp_low(phi, k.k + 2, "exact"))
    den = 2.0 ** (-k.k) * dlow * pk
    return num / den if den > 0 else 0.0


def shell_constants(phi: G.Field, ks, delta_env: float = 0.5, mode: str = "smooth") -> ShellConstants:
    """Measured ``B_k`` constant, commutator gain and ``||psi_k^+|| / c_k`` per shell."""
    env = G.frequency_envelope(phi, delta_env).as_dict()
    ks = np.asarray(list(ks), dtype=int)
    bk, cg, er = [], [], []
    for k in ks:
        bk.append(bk_constant(phi, k, mode))
        cg.append(commutator_gain(phi, k, mode))
        c = env.get(int(k), 0.0)
        er.append(G.norm_l2(gauge_psi_k(phi, k, mode)) / c if c > 0 else np.nan)
    return ShellConstants(ks, np.array(bk), np.array(cg), np.array(er))
