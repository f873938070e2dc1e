import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ilwlab import grid as G
from ilwlab import solver as S


def cfg(L=64.0, n=256, **kw):
    return S.SimConfig(G.GridSpec(L, n), **kw)


@pytest.mark.parametrize("model", S.MODELS)
def test_phases_are_odd(model):
    w = S.phase(model, 1.5)
    xi = np.linspace(-20, 20, 401)
    assert np.allclose(w(-xi), -w(xi), atol=1e-12)
    assert np.isfinite(w(np.array([0.0]))).all()


def test_phase_unknown():
    with pytest.raises(ValueError):
        S.phase("nls")


def test_phase_limits():
    xi = np.array([40.0, -60.0])
    assert np.allclose(S.phase("ilw")(xi), S.phase("bo")(xi), rtol=1e-15)
    lo = np.array([1e-2])
    assert S.phase("ilw-transport")(lo)[0] == pytest.approx(S.phase("kdv")(lo)[0], rel=1e-4)


@given(st.complex_numbers(max_magnitude=30, allow_nan=False, allow_infinity=False))
def test_phi_functions_match_closed_form(z):
    if abs(z) < 0.5:
        return
    p1, p2, p3 = S.phi_functions(np.array([z]), n_contour=64)
    e = np.exp(z)
    tol = 1e-11 * max(1.0, abs(e))
    assert abs(p1[0] - (e - 1) / z) <= tol
    assert abs(p2[0] - (e - 1 - z) / z**2) <= tol
    assert abs(p3[0] - (e - 1 - z - z**2 / 2) / z**3) <= tol


def test_phi_functions_at_zero():
    p1, p2, p3 = S.phi_functions(np.array([0.0, 1e-12j]))
    assert np.allclose(p1, 1.0, atol=1e-14)
    assert np.allclose(p2, 0.5, atol=1e-14)
    assert np.allclose(p3, 1 / 6, atol=1e-14)


# --- data and configs --------------------------------------------------------


@pytest.mark.parametrize("kind", ["gaussian", "sech2", "shell", "hat", "two-bump"])
def test_datum_kinds_are_mean_zero(kind):
    g = G.GridSpec(100.0, 512)
    f = S.Datum(kind=kind, amplitude=0.3).build(g)
    assert f.is_real
    assert abs(f.values.mean()) < 1e-15
    assert np.abs(f.values).max() <= 0.3 * 1.01 + 0.1


def test_hat_is_mean_zero_without_correction():
    g = G.GridSpec(200.0, 1024)
    f = S.Datum(kind="hat", zero_mean=False, width=4.0).build(g)
    assert abs(f.values.mean()) < 1e-15
    raw = S.Datum(kind="gaussian", zero_mean=False).build(g)
    assert raw.values.max() == pytest.approx(0.1)


def test_datum_file_roundtrip(tmp_path):
    g = G.GridSpec(50.0, 128)
    f = S.Datum(kind="hat").build(g)
    f.to_csv(tmp_path / "d.csv")
    back = S.Datum(kind="file", path=str(tmp_path / "d.csv")).build(g)
    assert np.allclose(back.values, f.values, atol=1e-16)
    with pytest.raises(ValueError):
        S.Datum(kind="file", path=str(tmp_path / "d.csv")).build(G.GridSpec(50.0, 256))
    with pytest.raises(ValueError):
        S.Datum(kind="file").build(g)
    with pytest.raises(ValueError):
        S.Datum(kind="square").build(g)


def test_simconfig_validation():
    g = G.GridSpec(10.0, 64)
    with pytest.raises(ValueError):
        S.SimConfig(g, dt=0.0)
    with pytest.raises(ValueError):
        S.SimConfig(g, model="nls")
    with pytest.raises(ValueError):
        S.SimConfig(g, delta=-1.0)
    with pytest.raises(ValueError):
        S.SimConfig(g, dt=0.3, t_end=1.0)
    with pytest.raises(ValueError):
        S.SimConfig(g, cadence=0)
    assert S.SimConfig(g, dt=0.1, t_end=1.0).n_steps == 10


def test_simtrace_validation():
    g = G.GridSpec(10.0, 64)
    f = G.Field.zeros(g)
    with pytest.raises(ValueError):
        S.SimTrace(np.array([0.0, 0.0]), [f, f], {}, 0.1)
    with pytest.raises(ValueError):
        S.SimTrace(np.array([0.0, 1.0]), [f, f], {"E0": [0.0]}, 0.1)


def test_evolve_rejects_nonzero_mean():
    c = cfg(dt=0.1, t_end=0.1)
    f = G.Field(c.grid, np.ones(c.grid.n))
    with pytest.raises(ValueError):
        S.evolve(c, f)


# --- energies ----------------------------------------------------------------


def test_E0_gaussian():
    g = G.GridSpec(60.0, 512)
    f = S.Datum(kind="gaussian", amplitude=1.0, width=2.0, zero_mean=False).build(g)
    assert S.energy(f, 0) == pytest.approx(0.5 * np.sqrt(np.pi / 2) * 2.0, rel=1e-13)


def test_E1_E2_need_mean_zero():
    g = G.GridSpec(60.0, 512)
    f = S.Datum(kind="gaussian", zero_mean=False).build(g)
    with pytest.raises(ValueError):
        S.energy(f, 1)
    with pytest.raises(ValueError):
        S.energy(f, 3)


def test_E1_quadratic_part_single_mode():
    # phi = cos(xi0 x): int phi T^{-1} phi_x = -(L/2) xi0 coth(xi0)
    g = G.GridSpec(2 * np.pi * 8, 256)
    xi0 = 3 * 2 * np.pi / g.L
    f = G.Field(g, 1e-4 * np.cos(xi0 * g.x))
    assert S.energy(f, 1) == pytest.approx(-1e-8 * g.L / 2 * xi0 / np.tanh(xi0), rel=1e-9)


# --- stepping ----------------------------------------------------------------


def test_linear_step_is_exact():
    c = cfg(dt=0.5, t_end=5.0, model="ilw-transport", cadence=10)
    u0 = S.Datum(kind="hat", amplitude=1e-12).build(c.grid)
    tr = S.evolve(c, u0)
    ref = G.propagate(u0, 5.0, S.phase("ilw-transport"))
    assert np.abs(tr.fields[-1].values - ref.values.real).max() <= 1e-10 * 1e-12


def test_snapshot_times_and_record():
    c = cfg(dt=0.1, t_end=1.0, cadence=4)
    tr = S.evolve(c, record=[3])
    assert np.allclose(tr.times, [0.0, 0.3, 0.4, 0.8, 1.0])
    assert set(tr.diagnostics) == {"E0", "E1", "E2", "Linf", "besov", "tilbert_half"}
    assert len(tr) == 5


def test_conservation_short():
    c = cfg(L=128.0, n=512, dt=0.01, t_end=2.0, cadence=50, datum=S.Datum(kind="hat", amplitude=0.3))
    tr = S.evolve(c)
    for k in ("E0", "E1", "E2"):
        e = tr.diagnostics[k]
        assert np.max(np.abs(e - e[0])) <= 1e-9 * abs(e[0])


def test_fourth_order_convergence():
    g = G.GridSpec(64.0, 256)
    d = S.Datum(kind="hat", amplitude=1.0)

    def run(dt):
        return S.evolve(S.SimConfig(g, dt=dt, t_end=0.5, datum=d, cadence=10**6, diagnostics=False)).fields[-1].values

    ref = run(1 / 1024)
    e = [np.abs(run(h) - ref).max() for h in (0.125, 0.0625, 0.03125)]
    assert 13 < e[0] / e[1] < 19
    assert 13 < e[1] / e[2] < 19


def test_step_etdrk4_matches_evolve():
    c = cfg(dt=0.05, t_end=0.05, datum=S.Datum(kind="hat", amplitude=0.5))
    u0 = c.datum.build(c.grid)
    one = S.step_etdrk4(u0, 0.05)
    assert np.array_equal(one.values, S.evolve(c).fields[-1].values)


def test_delta_scaling_matches():
    delta = 2.0
    g = G.GridSpec(128.0, 512)
    u0 = S.Datum(kind="hat", amplitude=0.2, width=4.0).build(g)
    tu = S.evolve(S.SimConfig(g, delta=delta, dt=0.02, t_end=2.0, cadence=25), u0)
    v0 = S.rescale_delta(u0, delta)
    tv = S.evolve(S.SimConfig(v0.grid, delta=1.0, dt=0.02 / delta**2, t_end=2.0 / delta**2, cadence=25), v0)
    assert np.allclose(tv.times, tu.times / delta**2)
    for a, b in zip(tu.fields, tv.fields):
        assert np.abs(S.rescale_delta(a, delta).values - b.values).max() <= 1e-8


def test_time_reversal():
    c = cfg(L=64.0, n=256, dt=0.01, t_end=1.0, cadence=1000, datum=S.Datum(kind="hat", amplitude=0.5))
    tr = S.evolve(c)
    back = S.evolve(c, S.reflect(tr.fields[-1]))
    assert np.abs(S.reflect(back.fields[-1]).values - tr.fields[0].values).max() <= 1e-11


def test_reflect_needs_centred_grid():
    with pytest.raises(ValueError):
        S.reflect(G.Field.zeros(G.GridSpec(10.0, 64, 0.0)))


def test_bo_limit_at_high_frequency():
    g = G.GridSpec(2 * np.pi * 16, 1024)
    x = g.x
    u0 = G.Field(g, 1e-3 * np.exp(-(x**2) / 16) * np.cos(14 * x))
    u0 = u0 - float(u0.values.mean())
    kw = dict(dt=0.001, t_end=0.5, cadence=10**6, diagnostics=False)
    a = S.evolve(S.SimConfig(g, model="ilw", **kw), u0).fields[-1].values
    b = S.evolve(S.SimConfig(g, model="bo", **kw), u0).fields[-1].values
    assert np.abs(a - b).max() <= 1e-4 * np.abs(u0.values).max()


def test_kdv_limit_at_low_frequency():
    g = G.GridSpec(4096.0, 1024)
    u0 = S.Datum(kind="hat", amplitude=1e-4, width=300.0).build(g)
    kw = dict(dt=1.0, t_end=20.0, cadence=10**6, diagnostics=False)
    a = S.evolve(S.SimConfig(g, model="ilw-transport", **kw), u0).fields[-1].values
    b = S.evolve(S.SimConfig(g, model="kdv", **kw), u0).fields[-1].values
    assert np.abs(a - b).max() <= 1e-3 * np.abs(u0.values).max()


def test_cfl_guard():
    c = cfg(dt=0.5, t_end=0.5, datum=S.Datum(kind="hat", amplitude=5.0))
    with pytest.raises(S.NumericalGuardError, match="CFL"):
        S.evolve(c)
    assert S.cfl_number(c.datum.build(c.grid), 0.5) > c.cfl


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_guard_without_dealiasing():
    g = G.GridSpec(16.0, 64)
    c = S.SimConfig(g, dt=0.05, t_end=200.0, cadence=10**6, dealias=False, cfl=100.0, model="bo",
                    datum=S.Datum(kind="hat", amplitude=3.0, width=1.0))
    with pytest.raises(S.NumericalGuardError) as e:
        S.evolve(c)
    assert e.value.time is not None


def test_rescale_delta_warns_when_underresolved():
    g = G.GridSpec(64.0, 256)
    f = G.Field(g, np.cos(2 * np.pi * 100 / 64 * g.x))
    with pytest.warns(RuntimeWarning):
        S.rescale_delta(f, 2.0, n_target=128)
    smooth = S.Datum(kind="hat", width=6.0).build(g)
    up = S.rescale_delta(smooth, 2.0, n_target=512)
    assert up.grid.n == 512 and up.grid.L == 32.0
    assert np.allclose(up.values[::2], S.rescale_delta(smooth, 2.0).values, atol=1e-14)
    with pytest.raises(ValueError):
        S.rescale_delta(smooth, 0.0)


def test_smoke_run_diagnostics_finite():
    g = G.GridSpec(400.0, 4096)
    c = S.SimConfig(g, dt=0.02, t_end=50.0, cadence=250, datum=S.Datum(kind="gaussian", amplitude=0.05))
    tr = S.evolve(c)
    assert tr.times[-1] == pytest.approx(50.0)
    for v in tr.diagnostics.values():
        assert np.all(np.isfinite(v))
