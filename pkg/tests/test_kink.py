import numpy as np
import pytest

from varkink.fredholm import RegimeError
from varkink.grid import Grid, derivative_values, second_derivative_values
from varkink.kink import (bvp_kink_oracle, build_kink, green_b, kink_residual, linearize, solve_Vb)
from varkink.profiles import builtin_drift, special_values

SQ2 = np.sqrt(2.0)
DELTAS = (0.01, 0.02, 0.04)


@pytest.fixture(scope="module")
def grid():
    return Grid(40.0, 0.005)


@pytest.fixture(scope="module")
def kinks(grid):
    return {d: build_kink(builtin_drift("canonical", d, grid)) for d in (0.0,) + DELTAS}


def test_unperturbed_fundamental_pair(grid):
    pair = solve_Vb(builtin_drift("canonical", 0.0, grid))
    assert np.max(np.abs(pair.Yb.half - special_values("Y0", grid.y_half))) == 0.0


@pytest.mark.parametrize("delta", DELTAS)
def test_fundamental_pair_perturbation(delta, grid):
    pair = solve_Vb(builtin_drift("canonical", delta, grid))
    y = grid.y_half
    Vb = pair.Yb.half - special_values("Y0", y)
    assert np.max(np.exp(SQ2 * y) * np.abs(Vb)) <= 50 * delta
    assert pair.wronskian_defect <= 1e-8


def lb_apply(u, drift, h):
    H = np.tanh(np.arange(u.size) * h / SQ2)
    b = drift.b.half
    return -second_derivative_values(u, h) + b * derivative_values(u, h, 4) + (3 * H ** 2 - 1) * u


@pytest.mark.parametrize("delta", [0.0, 0.02])
def test_green_function_inverts_operator(delta, grid):
    drift = builtin_drift("canonical", delta, grid)
    pair = solve_Vb(drift)
    G = green_b(pair.Yb, pair.Zb, drift.p)
    y = grid.y_half
    assert np.all(G(np.zeros(y.size, dtype=int), np.arange(y.size)) == 0.0)
    F = 1.0 / np.cosh(y / SQ2) ** 3
    u = G.apply(F)
    r = lb_apply(u, drift, grid.h) - F
    assert np.max(np.abs(r[3:-3])) <= 1e-6


def test_green_function_weighted_symmetry(grid):
    drift = builtin_drift("canonical", 0.04, grid)
    pair = solve_Vb(drift)
    G = green_b(pair.Yb, pair.Zb, drift.p)
    p = drift.p.half
    i = np.arange(0, grid.m + 1, 97)
    I, J = np.meshgrid(i, i, indexing="ij")
    lhs = p[J] * G(I, J)
    rhs = p[I] * G(J, I)
    assert np.max(np.abs(lhs - rhs)) <= 1e-8


def test_unperturbed_kink(kinks, grid):
    k = kinks[0.0]
    assert np.all(k.H_delta.values == 0.0)
    assert np.array_equal(k.K.values, special_values("H", grid.y))
    assert k.residual <= 1e-10


@pytest.mark.parametrize("delta", DELTAS)
def test_kink_residual_and_limits(delta, kinks):
    k = kinks[delta]
    assert k.residual <= 1e-8
    assert abs(k.K.values[-1] - 1) <= 1e-10 and abs(k.K.values[0] + 1) <= 1e-10
    assert 0 < k.contraction_factor < 1
    assert k.K.parity == "odd" and k.d.parity == "even"


def test_decay_constant_scales_linearly(kinks):
    ratios = [kinks[d].decay_constant / d for d in DELTAS]
    assert max(ratios) / min(ratios) <= 1.5


@pytest.mark.parametrize("delta", [0.02, 0.04])
def test_fixed_point_matches_dense_bvp(delta, kinks):
    k = kinks[delta]
    eta = bvp_kink_oracle(k.drift)
    assert np.max(np.abs(eta - k.H_delta.half)) <= 1e-7


def test_kink_residual_helper_detects_wrong_profile(grid):
    drift = builtin_drift("canonical", 0.02, grid)
    H = special_values("H", grid.y)
    assert kink_residual(H, drift.b.values, grid.h) > 1e-3


def test_contraction_regime_rejected(grid):
    with pytest.raises(RegimeError):
        build_kink(builtin_drift("canonical", 0.08, grid))


def test_linearization_conventions(kinks):
    k = kinks[0.02]
    lin = linearize(k)
    assert np.allclose(lin.beta.values, -k.drift.b.values)
    assert np.allclose(lin.weight.values * k.drift.p.values, 1.0)
    printed = linearize(k, "as-printed")
    assert np.allclose(printed.weight.values, k.drift.p.values)
    with pytest.raises(ValueError):
        linearize(k, "other")
