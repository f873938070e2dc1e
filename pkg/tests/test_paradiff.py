import numpy as np
import pytest
from conftest import random_bandlimited

from ilwlab import grid as G
from ilwlab import paradiff as P
from ilwlab import solver as S


@pytest.fixture
def g():
    return G.GridSpec(64.0, 2048)


@pytest.fixture
def phi(g):
    return S.Datum(kind="hat", amplitude=1.0, width=1.5).build(g)


def test_primitive(phi):
    Phi = P.primitive_Phi(phi)
    assert abs(Phi.values.mean()) < 1e-14
    assert np.allclose(G.derivative(Phi).values, 0.5 * phi.values, atol=1e-12)


def test_mean_zero_required(g):
    with pytest.raises(ValueError, match="mean"):
        P.primitive_Phi(G.Field(g, np.ones(g.n)))


def test_shell_range_checked(phi):
    lo, hi = G.shell_range(phi.grid, "smooth")
    with pytest.raises(ValueError, match="below"):
        P.nf_Bk(phi, lo - 1)
    with pytest.raises(ValueError, match="above"):
        P.nf_Bk(phi, hi + 1)


@pytest.mark.parametrize("k", [-2, 0, 2, 4])
def test_gauge_preserves_norm(phi, k):
    psi = P.gauge_psi_k(phi, k)
    core = G.lp_project(phi, G.DyadicIndex(k, 1), "smooth") + P.nf_Bk(phi, k)
    assert abs(G.norm_l2(psi) - G.norm_l2(core)) <= 1e-14 * G.norm_l2(core)


def test_Bk_is_quadratic(phi):
    b1 = P.nf_Bk(phi, 1)
    b3 = P.nf_Bk(3.0 * phi, 1)
    assert np.allclose(b3.values, 9.0 * b1.values, atol=1e-13 * np.abs(b3.values).max())


def test_Bk_frequency_support(phi):
    # low factor below 2^k, shell factor below 2^{k+1}
    k = 2
    c = P.nf_Bk(phi, k).spectrum()
    outside = np.abs(phi.grid.xi) >= 3 * 2.0**k
    assert np.abs(c[outside]).max() <= 1e-12 * np.abs(c).max()


def test_commutator_vanishes_for_constant_low_part(g, rng):
    # with f_{<k} = 0 there is nothing to commute with
    f = G.lp_high(random_bandlimited(g, rng, 200), 4, "smooth")
    h = random_bandlimited(g, rng, 200)
    assert np.abs(P.commutator_term(f, h, 2).values).max() <= 1e-13


@pytest.mark.parametrize("k", [0, 3, 6])
def test_quadratic_expansion_is_third_order(g, k):
    base = S.Datum(kind="hat", amplitude=1.0, width=1.5).build(g)
    ratios = []
    for eps in (1e-3, 5e-4):
        phi = eps * base
        rem = G.norm_l2(P.gauge_psi_k(phi, k) - P.quadratic_expansion(phi, k))
        ratios.append(rem / eps**3)
    assert np.isfinite(ratios).all()
    assert ratios[0] < 1.0
    assert 0.5 < ratios[1] / max(ratios[0], 1e-300) < 2.0


def test_shell_constants(phi, tmp_path):
    sc = P.shell_constants(phi, range(-2, 6))
    assert np.all(np.isfinite(sc.bk)) and np.all(sc.bk < 1.0)
    assert np.all(np.isfinite(sc.commutator)) and np.all(sc.commutator < 5.0)
    ok = np.isfinite(sc.envelope)
    assert ok.any() and np.all(sc.envelope[ok] < 5.0)
    sc.to_csv(tmp_path / "c.csv", "h")
    rows = np.loadtxt(tmp_path / "c.csv", delimiter=",", skiprows=2)
    assert rows.shape == (8, 4)
    assert list(rows[:, 0]) == list(range(-2, 6))


def test_sharp_mode(phi):
    b = P.nf_Bk(phi, 1, mode="exact")
    assert np.isfinite(b.values).all()
    assert P.bk_constant(phi, 1, mode="exact") < 1.0
