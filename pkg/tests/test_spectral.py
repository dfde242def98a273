import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varkink.grid import (GridFn, derivative_values, inner_p, parity_residual, second_derivative_values,
                          simpson)
from varkink.profiles import special_values
from varkink.spectral import (build_g, eigen_residual, matrix_oracle, resolvent_L6, shoot_even,
                              shoot_odd)

SQ2 = np.sqrt(2.0)


def unperturbed_values(u, grid):
    H = np.tanh(grid.y / SQ2)
    return -second_derivative_values(u, grid.h) + (3 * H ** 2 - 1) * u


def test_shooting_at_unperturbed_eigenvalues(pipe):
    _, lin, _ = pipe(0.0)
    U, slope = shoot_even(0.0, lin)
    assert np.max(np.abs(U)) == 0.0 and slope == 0.0
    V, value = shoot_odd(1.5, lin)
    assert np.max(np.abs(V)) == 0.0 and value == 0.0


def test_shooting_sign_and_monotonicity(pipe):
    _, lin0, _ = pipe(0.0)
    assert shoot_even(0.05, lin0)[1] > 0 > shoot_even(-0.05, lin0)[1]
    _, lin, spec = pipe(0.02)
    lams = spec.lambda0 + np.linspace(-0.04, 0.04, 5)
    slopes = [shoot_even(lam, lin)[1] for lam in lams]
    assert np.all(np.diff(slopes) > 0)


def test_unperturbed_spectrum(pipe):
    _, _, spec = pipe(0.0)
    assert abs(spec.lambda0) <= 1e-8
    assert abs(spec.lambda1 - 1.5) <= 1e-8
    y = spec.grid.y
    assert np.max(np.abs(spec.Ybar1.values - special_values("Y1", y))) <= 1e-6


@pytest.mark.parametrize("delta", [0.02, 0.04])
def test_perturbed_spectrum_against_matrix_oracle(delta, pipe):
    _, lin, spec = pipe(delta)
    h = spec.grid.h
    assert spec.oracle_gap <= max(1e-4, 10 * h * h)
    assert abs(spec.lambda0) <= 5 * delta and abs(spec.lambda1 - 1.5) <= 5 * delta
    assert 1.15 < spec.mu < 1.30
    assert parity_residual(spec.Ybar0.values, "even") <= 1e-8
    assert spec.diagnostics["eigen_residual0"] <= 1e-6
    assert spec.diagnostics["eigen_residual1"] <= 1e-6
    assert inner_p(spec.Ybar1, spec.Ybar1, lin.weight) == pytest.approx(1.0, abs=1e-12)


def test_matrix_oracle_discrete_spectrum(pipe):
    _, lin0, _ = pipe(0.0)
    vals, edge = matrix_oracle(lin0, n_eig=25)
    below = [v for v, _ in vals if v < 2 - 1e-2]
    assert len(below) == 2
    assert abs(below[0]) <= 5e-4 and abs(below[1] - 1.5) <= 5e-4
    assert all(v >= 2 - 1e-2 for v, _ in vals[20:])
    _, lin, _ = pipe(0.02)
    vals, edge = matrix_oracle(lin)
    odd_below = [v for v, par in vals if par == "odd" and v < 2 - 1e-2]
    assert len(odd_below) == 1


def test_self_adjointness(pipe, rng):
    _, lin, _ = pipe(0.04)
    grid = lin.grid
    y = grid.y
    w = lin.weight
    for _ in range(100):
        prof = []
        for _ in range(2):
            c, s = rng.uniform(-10, 10), rng.uniform(0.5, 3)
            prof.append(GridFn(grid, rng.normal() * np.exp(-((y - c) / s) ** 2), "none"))
        u, v = prof
        Lu = GridFn(grid, lin.apply(u), "none")
        Lv = GridFn(grid, lin.apply(v), "none")
        scale = np.sqrt(inner_p(Lu, Lu, w) * inner_p(v, v, w)) + 1e-300
        assert abs(inner_p(Lu, v, w) - inner_p(u, Lv, w)) <= 1e-8 * max(scale, 1.0)


def manufactured_resolvent(grid):
    y = grid.y
    G0 = np.tanh(y / SQ2) * np.exp(-y ** 2 / 8)
    F = -unperturbed_values(G0, grid) + 6 * G0
    return G0, GridFn(grid, F, "odd", check_parity=False)


def test_resolvent_round_trip(pipe):
    grid = pipe(0.0)[2].grid
    G0, F = manufactured_resolvent(grid)
    G, kF, imkF = resolvent_L6(F)
    assert np.max(np.abs(G.values - G0)) <= 1e-6
    assert abs(kF) <= 1e-6
    assert parity_residual(G.values, "odd") <= 1e-8
    zero, _, _ = resolvent_L6(GridFn(grid, np.zeros(grid.N), "odd"))
    assert np.all(zero.values == 0.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.0, 6.0))
def test_resolvent_solves_equation_for_odd_data(width, center):
    from varkink.grid import Grid
    grid = Grid(30.0, 0.01)
    y = grid.y
    F = GridFn(grid, np.exp(-((y - center) / width) ** 2) - np.exp(-((y + center) / width) ** 2), "odd")
    G, _, _ = resolvent_L6(F)
    assert parity_residual(G.values, "odd") <= 1e-8
    r = -unperturbed_values(G.values, grid) + 6 * G.values - F.values
    assert np.max(np.abs(r[5:-5])) <= 1e-5


@pytest.mark.parametrize("delta", [0.0, 0.02])
def test_source_and_correction(delta, pipe):
    _, lin, spec = pipe(delta)
    w = lin.weight
    assert abs(inner_p(spec.fbar, spec.Ybar1, w)) <= 1e-10
    assert abs(inner_p(spec.q, spec.Ybar1, w)) <= 1e-8
    r = lin.apply(spec.q) - spec.fbar.values
    n = int(round(1.0 / spec.grid.h))
    assert np.max(np.abs(r[n:-n])) <= 1e-6
    y = spec.grid.y
    qp = derivative_values(spec.q.values, spec.grid.h, 4)
    tail = np.exp(np.abs(y) / SQ2) * (np.abs(spec.q.values) + np.abs(qp))
    assert np.isfinite(tail).all() and tail[np.abs(y) < 35].max() < 1e3


def test_unperturbed_source_closed_form(pipe):
    _, _, spec = pipe(0.0)
    grid = spec.grid
    y = grid.y
    H, Y1 = special_values("H", y), special_values("Y1", y)
    proj = simpson(H * Y1 ** 3, grid.h)
    f = 1.5 * (H * Y1 ** 2 - proj * Y1)
    assert np.max(np.abs(spec.fbar.values - f)) <= 1e-8
    assert np.max(np.abs(spec.f0.values - f)) <= 1e-8


def test_unperturbed_constants(pipe):
    _, _, spec = pipe(0.0)
    assert spec.a_const == pytest.approx(spec.a0_const, abs=1e-12)
    assert abs(spec.a_const - 0.687271) <= 5e-4
    assert abs(spec.psi_f_imk + 0.327) <= 5e-3


def hbar_decay_weighted_sup(spec):
    y = spec.grid.y
    hp = derivative_values(spec.hbar.values, spec.grid.h, 4)
    tail = np.exp(np.abs(y) / SQ2) * (np.abs(spec.hbar.values) + np.abs(hp))
    return tail[np.abs(y) < 35].max()


def test_correction_profiles(pipe):
    _, lin0, spec0 = pipe(0.0)
    # at constant speed hbar is the resolvent profile g
    assert np.max(np.abs(spec0.hbar.values - spec0.g0.values)) <= 1e-5
    f0, g0 = build_g(spec0.grid, spec0.a_const)
    assert np.max(np.abs(g0.values - spec0.g0.values)) == 0.0
    for delta in (0.0, 0.02):
        _, lin, spec = pipe(delta)
        assert spec.diagnostics["hbar_residual"] <= 1e-5
        assert parity_residual(spec.hbar.values, "odd") <= 1e-8
        assert np.allclose(spec.gbar.values, lin.weight.values * spec.hbar.values)


def test_hbar_decays_at_constant_speed(pipe):
    assert hbar_decay_weighted_sup(pipe(0.0)[2]) < 1e3


def test_hbar_far_field_amplitude_is_order_delta(pipe):
    amps = [pipe(d)[2].diagnostics["tail_amplitude"] for d in (0.01, 0.02, 0.04)]
    ratios = np.array(amps) / np.array([0.01, 0.02, 0.04])
    assert ratios.max() / ratios.min() <= 2 and ratios.max() < 0.1


def test_hbar_decays_with_drift(pipe):
    # fails: the solvability constant a0 is fixed against the constant-speed Im k, which leaves
    # an O(delta) oscillatory far field (see test_hbar_far_field_amplitude_is_order_delta)
    assert hbar_decay_weighted_sup(pipe(0.02)[2]) < 1e3


def test_eigen_residual_detects_wrong_eigenvalue(pipe):
    _, lin, spec = pipe(0.02)
    assert eigen_residual(lin, spec.lambda1 + 1e-3, spec.Ybar1) > 1e-4
