import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varkink.diagnostics import DiagnosticsContext, VirialRecorder, random_odd_profiles
from varkink.dynamics import (BlowUpError, Evolver, FieldState, SimConfig, energy, energy_norm,
                              make_initial, parity_drift, run, sponge_rate, step)
from varkink.grid import Grid, GridError, parity_residual

H = 0.01


@pytest.fixture(scope="module")
def coarse(pipe):
    return {d: pipe(d, 40.0, H, False) for d in (0.0, 0.02)}


def zero_state(grid):
    z = np.zeros(grid.N)
    return FieldState.from_arrays(grid, 0.0, z, z.copy())


def test_zero_state_is_fixed(coarse):
    _, lin, spec = coarse[0.02]
    cfg = SimConfig(dt=0.4 * H, boundary="dirichlet")
    s = step(zero_state(spec.grid), lin, cfg)
    assert np.all(s.phi1.values == 0.0) and np.all(s.phi2.values == 0.0)
    assert s.t == pytest.approx(cfg.dt)
    assert energy(zero_state(spec.grid), lin) == 0.0


def test_linear_internal_mode_rotates(coarse):
    _, lin, spec = coarse[0.0]
    eps = 0.01
    ctx = DiagnosticsContext(spec, nonlinear=False)
    rec = VirialRecorder(ctx)
    cfg = SimConfig(dt=0.4 * H, T_final=20.0, boundary="dirichlet", sample_every=25, nonlinear=False)
    run(make_initial("internal-mode", eps, spec), lin, cfg, [rec])
    s = rec.series
    t, mu = s["t"], np.sqrt(1.5)
    assert spec.mu == pytest.approx(mu, abs=1e-8)
    err = max(np.max(np.abs(s["z1"] - eps * np.cos(mu * t))), np.max(np.abs(s["z2"] + eps * np.sin(mu * t))))
    assert err <= 1e-4 * eps


def test_leapfrog_is_reversible(coarse):
    _, lin, spec = coarse[0.02]
    ev = Evolver(lin, SimConfig(dt=0.4 * H, boundary="dirichlet"))
    init = make_initial("mixed", 0.05, spec)
    p1, p2 = np.array(init.phi1.half), np.array(init.phi2.half)
    p1, p2 = p1.copy(), p2 + 0.3 * p1
    start = p1.copy()
    for _ in range(1000):
        p1, p2, _ = ev.step_arrays(p1, p2)
    p2 = -p2
    for _ in range(1000):
        p1, p2, _ = ev.step_arrays(p1, p2)
    assert np.max(np.abs(p1 - start)) <= 1e-6


def energy_drift(lin, spec, dt, T):
    cfg = SimConfig(dt=dt, T_final=T, boundary="dirichlet", sample_every=int(round(0.5 / dt)))
    tr = run(make_initial("internal-mode", 0.01, spec), lin, cfg)
    E = tr.energies
    return tr.times, np.abs(E - E[0]) / max(abs(E[0]), 1e-30)


@pytest.mark.slow
def test_energy_conservation_rate(pipe):
    _, lin, spec = pipe(0.02, 40.0, 0.005, False)
    t, rel = energy_drift(lin, spec, 0.2 * 0.005, 100.0)
    assert np.all(rel[1:] <= 1e-6 * t[1:])


def test_energy_error_is_second_order_in_dt(coarse):
    _, lin, spec = coarse[0.02]
    _, a = energy_drift(lin, spec, 0.4 * H, 20.0)
    _, b = energy_drift(lin, spec, 0.2 * H, 20.0)
    assert 3.0 <= a.max() / b.max() <= 5.0


def test_energy_positive_on_odd_profiles(coarse, rng):
    _, lin, spec = coarse[0.02]
    grid = spec.grid
    half = random_odd_profiles(grid.y_half[1:], 200, rng)
    zero = np.zeros(grid.N)
    ratios = []
    for prof in half:
        vals = grid.extend(np.concatenate([[0.0], prof]), "odd")
        vals *= 1e-4 / energy_norm(vals, zero, H)
        ratios.append(energy(FieldState.from_arrays(grid, 0.0, vals, zero), lin) / 1e-8)
    c0 = min(ratios)
    assert c0 > 0


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-3, 0.05), st.floats(0.5, 3.0), st.floats(0.5, 8.0))
def test_energy_dominates_cubic_terms(coarse, amp, width, center):
    _, lin, spec = coarse[0.02]
    grid = spec.grid
    y = grid.y
    prof = np.exp(-((y - center) / width) ** 2) - np.exp(-((y + center) / width) ** 2)
    zero = np.zeros(grid.N)
    prof *= amp / energy_norm(prof, zero, H)
    E = energy(FieldState.from_arrays(grid, 0.0, prof, zero), lin)
    # lowest odd eigenvalue ~ mu^2 bounds the quadratic part; cubic part is O(amp^3)
    assert E >= 0.1 * amp ** 2 - 10 * amp ** 3


def test_make_initial(coarse):
    _, lin, spec = coarse[0.02]
    grid, eps = spec.grid, 0.01
    w, Y1 = spec.weight.values, spec.Ybar1.values
    from varkink.grid import simpson
    im = make_initial("internal-mode", eps, spec)
    assert simpson(w * im.phi1.values * Y1, H) == pytest.approx(eps, rel=1e-2)
    rad = make_initial("radiation", eps, spec)
    assert abs(simpson(w * rad.phi1.values * Y1, H)) <= 1e-3 * eps
    for kind in ("internal-mode", "radiation", "mixed"):
        s = make_initial(kind, eps, spec)
        assert parity_drift(s) <= 1e-12
        assert np.all(s.phi2.values == 0.0)
        if kind != "internal-mode":
            assert energy_norm(s.phi1.values, s.phi2.values, H) == pytest.approx(eps, rel=1e-2)
    with pytest.raises(GridError):
        make_initial("internal-mode", 0.06, spec)
    with pytest.raises(GridError):
        make_initial("kick", eps, spec)


def test_parity_preserved(coarse):
    _, lin, spec = coarse[0.02]
    cfg = SimConfig(dt=0.4 * H, T_final=1000 * 0.4 * H, boundary="dirichlet", sample_every=1000)
    tr = run(make_initial("mixed", 0.05, spec), lin, cfg)
    assert parity_drift(tr.final) <= 1e-10 * 0.05


def test_config_validation(coarse):
    _, lin, spec = coarse[0.02]
    grid = spec.grid
    with pytest.raises(GridError):
        SimConfig(dt=H).validate(grid)
    with pytest.raises(GridError):
        SimConfig(dt=0.4 * H, boundary="open").validate(grid)
    with pytest.raises(GridError):
        SimConfig(dt=0.4 * H, sponge_width=40.0).validate(grid)


def test_blowup_and_nonfinite_abort(coarse):
    _, lin, spec = coarse[0.02]
    grid = spec.grid
    cfg = SimConfig(dt=0.4 * H, T_final=1.0, boundary="dirichlet", sample_every=10)
    bad = np.full(grid.N, np.nan)
    with pytest.raises(BlowUpError):
        step(FieldState.from_arrays(grid, 0.0, bad, bad), lin, cfg)
    with pytest.raises(BlowUpError):
        run(make_initial("internal-mode", 0.01, spec), lin, cfg, blowup_factor=1e-3)


def test_sponge_profile():
    grid = Grid(40.0, H)
    rate = sponge_rate(grid, 10.0, 0.5)
    assert np.all(rate[np.abs(grid.y) <= 30.0] == 0.0)
    assert rate[-1] == pytest.approx(0.5) and parity_residual(rate, "even") == 0.0
    assert np.all(np.diff(rate[grid.m:]) >= 0)


def reflected_fraction(lin, lin_ref, init, T):
    """Energy left inside |y| <= 30 relative to a doubled-domain run without boundary effects."""
    grid, big = lin.grid, lin_ref.grid
    off = big.m - grid.m
    pad = lambda a: np.concatenate([np.zeros(off), a, np.zeros(off)])
    ref_init = FieldState.from_arrays(big, 0.0, pad(init.phi1.values), pad(init.phi2.values))
    a = run(init, lin, SimConfig(dt=0.4 * H, T_final=T, boundary="sponge", sample_every=10 ** 6))
    b = run(ref_init, lin_ref, SimConfig(dt=0.4 * H, T_final=T, boundary="dirichlet", sample_every=10 ** 6))
    d1 = a.final.phi1.values - b.final.phi1.values[off:-off]
    d2 = a.final.phi2.values - b.final.phi2.values[off:-off]
    mask = (np.abs(grid.y) <= 30.0).astype(float)
    incident = energy_norm(init.phi1.values, init.phi2.values, H) ** 2
    return energy_norm(d1, d2, H, mask) ** 2 / incident


@pytest.fixture(scope="module")
def sponge_pair(pipe):
    from varkink.kink import build_kink, linearize
    from varkink.profiles import builtin_drift
    _, lin, spec = pipe(0.02, 40.0, H, False)
    lin_ref = linearize(build_kink(builtin_drift("canonical", 0.02, Grid(80.0, H))))
    return lin, lin_ref, spec


@pytest.mark.parametrize("k0,T", [(1.0, 80.0), (3.0, 55.0)])
def test_sponge_absorbs_outgoing_packets(k0, T, sponge_pair):
    lin, lin_ref, spec = sponge_pair
    grid, y = spec.grid, spec.grid.y
    env = lambda s: np.exp(-((s - 20.0) / 2.0) ** 2)
    om = np.sqrt(k0 * k0 + 2.0)
    p1 = env(y) * np.cos(k0 * (y - 20)) - env(-y) * np.cos(k0 * (-y - 20))
    p2 = om * (env(y) * np.sin(k0 * (y - 20)) - env(-y) * np.sin(k0 * (-y - 20)))
    init = FieldState.from_arrays(grid, 0.0, 1e-2 * p1, 1e-2 * p2)
    assert reflected_fraction(lin, lin_ref, init, T) <= 1e-2


def test_sponge_reflection_on_radiation_run(sponge_pair):
    # fails: the bump carries long waves with group velocity near 0 that a width-10 ramp
    # reflects at the 4e-3 level (see the sponge entry of the decisions ledger)
    lin, lin_ref, spec = sponge_pair
    init = make_initial("radiation", 0.01, spec)
    assert reflected_fraction(lin, lin_ref, init, 80.0) <= 1e-3


@pytest.mark.slow
@pytest.mark.parametrize("delta", [0.0, 0.02])
@pytest.mark.parametrize("kind", ["internal-mode", "radiation", "mixed"])
def test_orbital_bound(delta, kind, coarse):
    _, lin, spec = coarse[delta]
    eps = 0.01
    tr = run(make_initial(kind, eps, spec), lin, SimConfig(dt=0.4 * H, T_final=400.0, sample_every=250))
    assert tr.sup_norm <= 5 * eps
