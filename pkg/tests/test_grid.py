import numpy as np
import pytest
from conftest import random_bandlimited
from hypothesis import given
from hypothesis import strategies as st

from ilwlab import grid as G


@pytest.fixture
def g():
    return G.GridSpec(40.0, 512)


def test_gridspec_validation():
    with pytest.raises(ValueError):
        G.GridSpec(-1.0, 64)
    with pytest.raises(ValueError):
        G.GridSpec(1.0, 100)
    with pytest.raises(ValueError):
        G.GridSpec(1.0, 8)
    s = G.GridSpec(10.0, 64)
    assert s.x_min == -5.0 and s.x[0] == -5.0
    assert np.isclose(s.xi_max, np.pi * 64 / 10.0)
    assert sorted(s.m) == list(range(-32, 32))


def test_field_is_immutable(g):
    f = G.Field.zeros(g)
    with pytest.raises(AttributeError):
        f.values = np.ones(g.n)
    assert not f.values.flags.writeable


def test_parseval(g, rng):
    f = random_bandlimited(g, rng, 100)
    c = f.spectrum()
    assert np.isclose(G.norm_l2(f) ** 2, g.L * np.sum(np.abs(c) ** 2), rtol=1e-12)


def test_identity_multiplier(g, rng):
    f = random_bandlimited(g, rng, 100)
    assert np.allclose(G.apply_multiplier(f, 1.0).values, f.values, rtol=0, atol=1e-14)


def test_multiplier_rejects_undefined(g, rng):
    f = random_bandlimited(g, rng, 10)
    with pytest.raises(ValueError):
        G.apply_multiplier(f, lambda xi: 1.0 / (xi - g.xi[3]))
    with pytest.raises(ValueError):
        G.apply_multiplier(f, lambda xi: 1.0 / xi)


def test_derivative_and_antiderivative(g):
    k = 2 * np.pi * 3 / g.L
    f = G.Field(g, np.sin(k * g.x))
    assert np.abs(G.derivative(f).values - k * np.cos(k * g.x)).max() < 1e-12
    assert np.abs(G.antiderivative(f).values + np.cos(k * g.x) / k).max() < 1e-12
    with pytest.raises(ValueError):
        G.antiderivative(f + 1.0)


def test_hilbert_convention(g, rng):
    k = 2 * np.pi * 3 / g.L
    # H <-> +i sgn(xi): cos -> -sin
    H = G.hilbert(G.Field(g, np.cos(k * g.x)))
    assert np.abs(H.values + np.sin(k * g.x)).max() < 1e-13
    f = random_bandlimited(g, rng, 120)
    assert np.abs(G.hilbert(G.hilbert(f)).values + f.values).max() <= 1e-12 * np.abs(f.values).max()


def test_half_lines_and_hilbert(g, rng):
    f = random_bandlimited(g, rng, 120, real=False)
    f = f - f.mean()
    p, m = G.half_line(f, 1), G.half_line(f, -1)
    ny = np.zeros(g.n)
    assert np.allclose((p + m).values, f.values - G.apply_multiplier(f, ny, at_zero=1.0).values, atol=1e-13)
    # (P+ - P-) = -i H under H <-> i sgn
    assert np.allclose((p - m).values, (-1j * G.hilbert(f).values), atol=1e-13)


@pytest.mark.parametrize("delta", [1.0, 2.5])
def test_tilbert_product_identity(g, rng, delta):
    u = random_bandlimited(g, rng, 60)
    v = random_bandlimited(g, rng, 60)
    P = G.dealiased_product
    lhs = G.tilbert_inv(P(u, G.tilbert(v, delta)) + P(v, G.tilbert(u, delta)), delta)
    rhs = P(u, v) - P(G.tilbert(u, delta), G.tilbert(v, delta))
    r = (lhs - rhs).values
    # T^{-1} has no zero mode on the torus: the identity holds off the mean
    assert np.abs(r - r.mean()).max() <= 1e-10 * np.abs(rhs.values).max()


def test_real_closure(g, rng):
    f = random_bandlimited(g, rng, 100)
    ops = [
        G.hilbert,
        G.tilbert,
        lambda h: G.tilbert_inv_dx(G.derivative(h)),
        lambda h: G.smoothing_P_dx(h, 2),
        lambda h: G.lp_project(h, 1),
        lambda h: G.lp_project(h, 1, "smooth"),
        G.abs_tilbert_half,
    ]
    for op in ops:
        assert op(f).is_real


def test_smoothing_requires_derivative(g, rng):
    with pytest.raises(ValueError):
        G.smoothing_P_dx(random_bandlimited(g, rng, 10), 0)


def test_propagate_is_unitary(g, rng):
    f = random_bandlimited(g, rng, 100)
    h = G.propagate(f, 3.7, lambda xi: xi**3)
    assert np.isclose(G.norm_l2(h), G.norm_l2(f), rtol=1e-13)


# --- Littlewood-Paley --------------------------------------------------------


def test_psi_bump():
    r = np.linspace(-3, 3, 601)
    p = G.psi_bump(r)
    assert np.all(p[np.abs(r) <= 1] == 1.0) and np.all(p[np.abs(r) >= 2] == 0.0)
    assert np.all(np.diff(p[r >= 0]) <= 0)


@pytest.mark.parametrize("mode", ["exact", "smooth"])
def test_partition_of_unity(g, rng, mode):
    f = random_bandlimited(g, rng, 250)
    lo, hi = G.shell_range(g, mode)
    tot = sum((G.lp_project(f, k, mode) for k in range(lo, hi + 1)), G.Field.zeros(g))
    assert np.abs(tot.values - (f.values - f.mean())).max() <= 1e-12 * np.abs(f.values).max()


def test_exact_shells_disjoint(g, rng):
    f = random_bandlimited(g, rng, 250)
    lo, hi = G.shell_range(g)
    for k in range(lo, hi + 1):
        for j in range(lo, hi + 1):
            if abs(j - k) >= 2:
                assert np.abs(G.lp_project(G.lp_project(f, j), k).values).max() < 1e-14
    with pytest.raises(ValueError):
        G.lp_project(f, lo - 1)


def test_signed_projections(g, rng):
    f = random_bandlimited(g, rng, 200)
    for k in range(0, 4):
        both = G.lp_project(f, G.DyadicIndex(k, 1)) + G.lp_project(f, G.DyadicIndex(k, -1))
        assert np.allclose(both.values, G.lp_project(f, k).values, atol=1e-14)
    with pytest.raises(ValueError):
        G.DyadicIndex(0, 2)


def test_low_high_split(g, rng):
    f = random_bandlimited(g, rng, 200)
    for mode in ("exact", "smooth"):
        s = G.lp_low(f, 2, mode) + G.lp_high(f, 2, mode)
        assert np.allclose(s.values, f.values, atol=1e-13)


# --- norms and envelopes -----------------------------------------------------


def _single_shell(g, k):
    # one lattice mode pair inside exact shell k, unit L^2
    m = int(round(2.0**k * g.L / (2 * np.pi)))
    xi = 2 * np.pi * m / g.L
    assert 2 ** (k - 0.5) <= xi < 2 ** (k + 0.5)
    f = G.Field(g, np.cos(xi * g.x))
    return f * (1.0 / G.norm_l2(f))


def test_besov_single_shell():
    g = G.GridSpec(1024.0, 1024)
    f = _single_shell(g, -4)
    assert np.isclose(G.norm_besov(f), np.sqrt(1 + 2**4), rtol=1e-12)


def test_tilbert_half_high_frequency(g):
    f = _single_shell(g, 3)
    # support at |xi| ~ 8 >= 5: tanh is 1 to ~1e-7
    assert np.isclose(G.norm_tilbert_half(f), G.norm_l2(f), rtol=1e-4)
    z = G.Field.zeros(g)
    assert G.norm_besov(z) == 0 and G.norm_tilbert_half(z) == 0


def test_envelope_single_shell(g):
    f = _single_shell(g, 1)
    env = G.frequency_envelope(f, 0.5)
    for k, c in env.as_dict().items():
        assert np.isclose(c, 2.0 ** (-0.5 * abs(k - 1)), rtol=1e-12)
    with pytest.raises(ValueError):
        G.frequency_envelope(f, 0.0)


@given(st.integers(0, 2**31), st.sampled_from([0.25, 0.5, 1.0]))
def test_envelope_properties(seed, de):
    g = G.GridSpec(40.0, 256)
    f = random_bandlimited(g, np.random.default_rng(seed), 120, decay=np.random.default_rng(seed).uniform(0, 3))
    env = G.frequency_envelope(f, de)
    assert env.dominates(G.dyadic_norms(f))
    assert env.slowly_varying()
    assert np.isfinite(env.l2())


def test_sentinel_mass(g):
    f = G.Field(g, np.exp(-g.x**2))
    assert G.sentinel_mass(f) < 1e-30
    h = G.Field(g, np.ones(g.n))
    assert np.isclose(G.sentinel_mass(h), 2 * round(0.05 * g.n) / g.n)


# --- products ----------------------------------------------------------------


def _upsample(f, n2):
    g2 = G.GridSpec(f.grid.L, n2, f.grid.x_min)
    c = np.fft.fft(f.values) / f.grid.n
    m = np.fft.fftfreq(f.grid.n, 1.0 / f.grid.n).astype(int)
    cc = np.zeros(n2, complex)
    cc[m % n2] = c
    return G.Field(g2, np.fft.ifft(cc * n2).real)


def _truncate(f, n):
    c = np.fft.fft(f.values) / f.grid.n
    m = np.fft.fftfreq(f.grid.n, 1.0 / f.grid.n).astype(int)
    keep = np.abs(m) < n // 2  # Nyquist dropped, as in the package
    cc = np.zeros(n, complex)
    cc[m[keep] % n] = c[keep]
    g = G.GridSpec(f.grid.L, n, f.grid.x_min)
    return G.Field(g, np.fft.ifft(cc * n).real)


def test_dealiased_product_vs_doubled_grid(g, rng):
    u = random_bandlimited(g, rng, 250)
    v = random_bandlimited(g, rng, 250)
    ref = _truncate(_upsample(u, 2 * g.n) * _upsample(v, 2 * g.n), g.n)
    got = G.dealiased_product(u, v)
    assert np.abs(got.values - ref.values).max() <= 1e-12 * np.abs(ref.values).max()


def test_bilinear_unit_symbol(g, rng):
    u = random_bandlimited(g, rng, 250)
    v = random_bandlimited(g, rng, 250)
    got = G.bilinear_apply(lambda x, y: np.ones_like(x), u, v)
    ref = G.dealiased_product(u, v)
    assert np.abs(got.values - ref.values).max() <= 1e-12 * np.abs(ref.values).max()


def test_bilinear_leibniz(g, rng):
    u = random_bandlimited(g, rng, 80)
    v = random_bandlimited(g, rng, 80)
    got = G.bilinear_apply(lambda x, y: 0.5j * (x + y), u, v)
    ref = G.derivative(G.dealiased_product(u, v)) * 0.5
    assert np.abs(got.values - ref.values).max() <= 1e-12 * np.abs(ref.values).max()


def test_bilinear_bo_operator_form(g, rng):
    u = random_bandlimited(g, rng, 80)
    b = lambda x, y: 0.75 + 0.25 * np.sign(x) * np.sign(y)
    got = G.bilinear_apply(b, u, u)
    Hu = G.hilbert(u)
    P = G.dealiased_product
    ref = (3.0 * P(u, u) - P(Hu, Hu)) * 0.25
    # P+ P- structure: sgn sgn <-> -(H u)(H u)
    assert np.abs(got.values - ref.values).max() <= 1e-10 * np.abs(ref.values).max()


def test_bilinear_symmetric_symbol_gives_symmetric_form(g, rng):
    u = random_bandlimited(g, rng, 60)
    v = random_bandlimited(g, rng, 60)
    b = lambda x, y: np.cos(x) * np.cos(y) + x * y
    a1, a2 = G.bilinear_apply(b, u, v), G.bilinear_apply(b, v, u)
    assert np.abs(a1.values - a2.values).max() <= 1e-13 * np.abs(a1.values).max()


def test_bilinear_cache_slices_consistently(g, rng):
    G.clear_symbol_cache()
    b = lambda x, y: np.exp(-((x - y) ** 2))
    u = random_bandlimited(g, rng, 100)
    v = random_bandlimited(g, rng, 60)
    keyed = G.bilinear_apply(b, u, v, key="test")
    keyed_small = G.bilinear_apply(b, v, v, key="test")  # served from the cached block
    assert np.allclose(keyed.values, G.bilinear_apply(b, u, v).values, rtol=0, atol=1e-14)
    assert np.allclose(keyed_small.values, G.bilinear_apply(b, v, v).values, rtol=0, atol=1e-14)
    G.clear_symbol_cache()


def test_aliasing_guard(g, rng):
    u = random_bandlimited(g, rng, 200)
    with pytest.raises(G.AliasingError):
        G.bilinear_apply(lambda x, y: np.ones_like(x), u, u, dealias=False)
    w = random_bandlimited(g, rng, 50)
    G.bilinear_apply(lambda x, y: np.ones_like(x), w, w, dealias=False)


def test_trilinear_unit_symbol(rng):
    g = G.GridSpec(20.0, 128)
    u, v, w = (random_bandlimited(g, rng, 12) for _ in range(3))
    got = G.trilinear_apply(lambda a, b, c: np.ones_like(a), u, v, w)
    ref = G.dealiased_product(G.dealiased_product(u, v), w)
    assert np.abs(got.values - ref.values).max() <= 1e-12 * np.abs(ref.values).max()


# --- serialization -----------------------------------------------------------


def test_csv_and_binary_roundtrip(tmp_path, g, rng):
    f = random_bandlimited(g, rng, 100)
    z = G.Field(g, f.values + 1j * f.values[::-1])
    for obj in (f, z):
        p1, p2 = tmp_path / "f.csv", tmp_path / "f.bin"
        obj.to_csv(p1)
        obj.to_binary(p2)
        a, b = G.Field.from_csv(p1), G.Field.from_binary(p2)
        assert a.grid == g and b.grid == g
        assert np.array_equal(a.values, obj.values) and np.array_equal(b.values, obj.values)
