"""Closed-form profiles of the constant-speed kink problem and the drift families.

The unperturbed linearization is  L = -d^2/dy^2 - 1 + 3 tanh^2(y/sqrt 2); it has
the even zero mode Y0, the odd internal mode Y1 at eigenvalue 3/2 and
continuous spectrum from 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import (Grid, GridError, GridFn, ComplexGridFn, cumulative_from_left,
                   derivative_values)

SQ2 = np.sqrt(2.0)
Y1_NORM = 2.0 ** -0.75 * np.sqrt(3.0)
PSI_SCALE = 8.0 * SQ2


def _sech(x):
    return 1.0 / np.cosh(x)


# each entry: (function of y, parity)
def _H(y):
    return np.tanh(y / SQ2)


def _Hprime(y):
    return _sech(y / SQ2) ** 2 / SQ2


def _Hsecond(y):
    return -np.tanh(y / SQ2) * _sech(y / SQ2) ** 2


def _Y0(y):
    return 0.5 * _sech(y / SQ2) ** 2


def _Y0prime(y):
    return -np.tanh(y / SQ2) * _sech(y / SQ2) ** 2 / SQ2


def _Z0(y):
    # sech^2(y/sqrt2) * int_0^y cosh^4(s/sqrt2) ds, rewritten without overflow
    t, s = np.tanh(y / SQ2), _sech(y / SQ2)
    return (12.0 * y * s ** 2 + 16.0 * SQ2 * t + 4.0 * SQ2 * t * np.cosh(SQ2 * y)) / 32.0


def _Z0prime(y):
    return np.cosh(y / SQ2) ** 2 - SQ2 * np.tanh(y / SQ2) * _Z0(y)


def _Y1(y):
    return Y1_NORM * np.tanh(y / SQ2) * _sech(y / SQ2)


def _Y1prime(y):
    t, s = np.tanh(y / SQ2), _sech(y / SQ2)
    return Y1_NORM * s * (s * s - t * t) / SQ2


def _Z1(y):
    t, s = np.tanh(y / SQ2), _sech(y / SQ2)
    return -0.25 * s * (-5.0 + 3.0 * SQ2 * y * t + np.cosh(SQ2 * y))


def _Z1prime(y):
    t, s = np.tanh(y / SQ2), _sech(y / SQ2)
    bracket = -5.0 + 3.0 * SQ2 * y * t + np.cosh(SQ2 * y)
    dbracket = 3.0 * SQ2 * t + 3.0 * y * s * s + SQ2 * np.sinh(SQ2 * y)
    return -0.25 * (-s * t / SQ2 * bracket + s * dbracket)


def _psi(y):
    return PSI_SCALE * np.tanh(y / PSI_SCALE)


def _psiprime(y):
    return _sech(y / PSI_SCALE) ** 2


def _psi2(y):
    v = y / PSI_SCALE
    return -2.0 / PSI_SCALE * _sech(v) ** 2 * np.tanh(v)


def _psi3(y):
    v = y / PSI_SCALE
    return -2.0 / PSI_SCALE ** 2 * _sech(v) ** 2 * (1.0 - 3.0 * np.tanh(v) ** 2)


def _zeta(y):
    return _sech(y / PSI_SCALE)


def _zetaprime(y):
    v = y / PSI_SCALE
    return -_sech(v) * np.tanh(v) / PSI_SCALE


def _theta(y):
    return _sech(y / (2.0 * SQ2))


def _k(y):
    return np.exp(2j * y) * (1.0 + 0.5 * _sech(y / SQ2) ** 2 + 1j * SQ2 * np.tanh(y / SQ2))


SPECIAL = {
    "H": (_H, "odd"), "Hprime": (_Hprime, "even"), "Hsecond": (_Hsecond, "odd"),
    "Y0": (_Y0, "even"), "Y0prime": (_Y0prime, "odd"),
    "Z0": (_Z0, "odd"), "Z0prime": (_Z0prime, "even"),
    "Y1": (_Y1, "odd"), "Y1prime": (_Y1prime, "even"),
    "Z1": (_Z1, "even"), "Z1prime": (_Z1prime, "odd"),
    "psi": (_psi, "odd"), "psiprime": (_psiprime, "even"),
    "psi2": (_psi2, "odd"), "psi3": (_psi3, "even"),
    "zeta": (_zeta, "even"), "zetaprime": (_zetaprime, "odd"),
    "theta": (_theta, "even"),
}
SPECIAL_NAMES = tuple(SPECIAL) + ("k",)


def special_values(name: str, y):
    if name == "k":
        return _k(np.asarray(y, dtype=float))
    if name not in SPECIAL:
        raise KeyError(f"unknown special function {name!r}; choose from {', '.join(SPECIAL_NAMES)}")
    return SPECIAL[name][0](np.asarray(y, dtype=float))


def special(name: str, grid: Grid | None = None):
    """Sample a named closed-form profile on the grid."""
    grid = grid or Grid()
    if name == "k":
        return ComplexGridFn(grid, _k(grid.y))
    if name not in SPECIAL:
        raise KeyError(f"unknown special function {name!r}; choose from {', '.join(SPECIAL_NAMES)}")
    func, parity = SPECIAL[name]
    # sample the half line and mirror so tags hold exactly
    return GridFn.from_half(grid, func(grid.y_half), parity)


def kcirc_constants(mu: float):
    """(gamma, c1, c2, c0) for the oscillatory solutions of L k = 4 mu^2 k.

    k(y) = exp(i gamma y)(1 + c1/2 sech^2(y/sqrt2) + i c2 sqrt2 tanh(y/sqrt2)) solves the
    equation exactly for c1 = 3/(gamma^2 - 1), c2 = 3 gamma / (2(gamma^2 - 1)); c0 is the
    constant Wronskian of (Re k, Im k).
    """
    if not 4.0 * mu * mu > 2.0:
        raise GridError(f"4 mu^2 = {4 * mu * mu:.6g} must exceed 2 for an oscillatory solution")
    gamma = np.sqrt(4.0 * mu * mu - 2.0)
    if abs(gamma * gamma - 1.0) < 1e-8:
        raise GridError("gamma = 1 makes the oscillatory profile degenerate")
    c1 = 3.0 / (4.0 * mu * mu - 3.0)
    c2 = 3.0 * gamma / (8.0 * mu * mu - 6.0)
    c0 = (1.0 + 0.5 * c1) * (c2 + gamma * (1.0 + 0.5 * c1))
    return gamma, c1, c2, c0


def kcirc_constants_printed(mu: float):
    """Constants from the alternative closed forms 3/(4mu^2+1), 3 gamma/(8mu^2+2).

    Kept only so reports can show how far they are from an actual solution.
    """
    gamma = np.sqrt(4.0 * mu * mu - 2.0)
    c1 = 3.0 / (4.0 * mu * mu + 1.0)
    c2 = 3.0 * gamma / (8.0 * mu * mu + 2.0)
    c0 = (1.0 + 0.5 * c1) * (c1 + gamma * (1.0 + 0.5 * c1))
    return gamma, c1, c2, c0


def kcirc_values(mu: float, y):
    gamma, c1, c2, _ = kcirc_constants(mu)
    y = np.asarray(y, dtype=float)
    return np.exp(1j * gamma * y) * (1.0 + 0.5 * c1 * _sech(y / SQ2) ** 2
                                     + 1j * c2 * SQ2 * np.tanh(y / SQ2))


def kcirc_prime_values(mu: float, y):
    gamma, c1, c2, _ = kcirc_constants(mu)
    y = np.asarray(y, dtype=float)
    t, s = np.tanh(y / SQ2), _sech(y / SQ2)
    amp = 1.0 + 0.5 * c1 * s * s + 1j * c2 * SQ2 * t
    damp = -c1 * s * s * t / SQ2 + 1j * c2 * s * s
    return np.exp(1j * gamma * y) * (1j * gamma * amp + damp)


def kcirc(mu: float, grid: Grid | None = None) -> ComplexGridFn:
    grid = grid or Grid()
    return ComplexGridFn(grid, kcirc_values(mu, grid.y))


# ---------------------------------------------------------------------------
# drift profiles


@dataclass(frozen=True)
class DriftProfile:
    """Odd drift b(y) with its derivative and the integrating factor p = exp int_0^y b."""

    b: GridFn
    delta: float
    p: GridFn
    b_prime: GridFn
    family: str = "custom"
    envelope_constant: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.b.grid


def _integrating_factor(grid: Grid, b_half) -> np.ndarray:
    return np.exp(cumulative_from_left(b_half, grid.h))


def drift_from_half(grid: Grid, b_half, bprime_half, delta: float, family: str) -> DriftProfile:
    b_half = np.asarray(b_half, dtype=float)
    b_half[0] = 0.0
    b = GridFn.from_half(grid, b_half, "odd")
    bp = GridFn.from_half(grid, bprime_half, "even")
    p = GridFn.from_half(grid, _integrating_factor(grid, b_half), "even")
    yh = grid.y_half
    env = float(np.max(np.exp(SQ2 * yh) * np.abs(b_half)) / delta) if delta > 0 else 0.0
    return DriftProfile(b, float(delta), p, bp, family, env)


def _canonical(y, delta):
    # 2 tanh(x) sech(x) peaks at exactly 1, so max|b| = delta
    x = SQ2 * y
    return 2.0 * delta * np.tanh(x) * _sech(x)


def _canonical_prime(y, delta):
    x = SQ2 * y
    s, t = _sech(x), np.tanh(x)
    return 2.0 * SQ2 * delta * s * (s * s - t * t)


_BUMP = np.sqrt(2.0 * np.e)


def _bump(y, delta):
    return delta * _BUMP * y * np.exp(-y * y)


def _bump_prime(y, delta):
    return delta * _BUMP * (1.0 - 2.0 * y * y) * np.exp(-y * y)


FAMILIES: dict[str, tuple[Callable, Callable]] = {
    "canonical": (_canonical, _canonical_prime),
    "bump": (_bump, _bump_prime),
}


def builtin_drift(family: str = "canonical", delta: float = 0.02, grid: Grid | None = None) -> DriftProfile:
    grid = grid or Grid()
    if family not in FAMILIES:
        raise KeyError(f"unknown drift family {family!r}; choose from {', '.join(FAMILIES)}")
    if not 0.0 <= delta <= 0.1:
        raise GridError(f"delta = {delta} outside [0, 0.1]")
    fb, fbp = FAMILIES[family]
    yh = grid.y_half
    return drift_from_half(grid, fb(yh, delta), fbp(yh, delta), delta, family)


@dataclass(frozen=True)
class SpeedProfile:
    """Even wave speed c(x) = 1 + c_delta(x), uniformly positive."""

    c: Callable
    delta: float
    c_prime: Callable | None = field(default=None, repr=False)
    name: str = "speed"

    @classmethod
    def from_csv(cls, path, delta: float | None = None) -> "SpeedProfile":
        """Read `x,c` rows (x >= 0 suffices; the profile is mirrored as an even function)."""
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        x, c = data[:, 0], data[:, 1]
        keep = x >= 0
        x, c = x[keep], c[keep]
        order = np.argsort(x)
        x, c = x[order], c[order]
        if x[0] != 0.0:
            raise GridError(f"{path}: speed table must contain x = 0")
        # even extension then spline
        xs = np.concatenate([-x[:0:-1], x])
        cs = np.concatenate([c[:0:-1], c])
        spl = CubicSpline(xs, cs, extrapolate=True)
        xmax = x[-1]

        def cfun(xx):
            xx = np.asarray(xx, dtype=float)
            return np.where(np.abs(xx) <= xmax, spl(np.clip(xx, -xmax, xmax)), c[-1])

        def cpfun(xx):
            xx = np.asarray(xx, dtype=float)
            return np.where(np.abs(xx) <= xmax, spl(np.clip(xx, -xmax, xmax), 1), 0.0)

        if delta is None:
            delta = float(np.max(np.abs(c - 1.0)))
        return cls(cfun, delta, cpfun, name=str(path))


def speed_to_drift(speed: SpeedProfile, grid: Grid | None = None) -> DriftProfile:
    """Drift in the travel-time coordinate y = int_0^x ds / c(s).

    With dx/dy = c the drift (1/c) d/dy c(x(y)) reduces to c'(x(y)).
    """
    grid = grid or Grid()
    L, h = grid.L, grid.h
    cmin_guess = max(1e-3, 1.0 - speed.delta)
    X = L / cmin_guess + 2.0
    nx = int(np.ceil(X / (0.5 * h)))
    xg = np.linspace(0.0, X, nx + 1)
    cvals = np.asarray(speed.c(xg), dtype=float)
    if np.any(~np.isfinite(cvals)) or np.any(cvals <= 0.0):
        i = int(np.argmax(~(cvals > 0)))
        raise GridError(f"speed profile not positive at x = {xg[i]:.6g} (c = {cvals[i]:.6g}); y(x) not monotone")
    mirror = np.asarray(speed.c(-xg[1:200]), dtype=float)
    if np.max(np.abs(mirror - cvals[1:200])) > 1e-10 * np.max(np.abs(cvals)):
        raise GridError("speed profile is not even")
    yx = cumulative_from_left(1.0 / cvals, xg[1] - xg[0])
    if np.any(np.diff(yx) <= 0.0):
        raise GridError("y(x) is not strictly increasing")
    if yx[-1] < L:
        raise GridError(f"speed table too short: y reaches {yx[-1]:.3f} < L = {L}")
    x_of_y = CubicSpline(yx, xg)
    yh = grid.y_half
    xh = x_of_y(yh)
    if speed.c_prime is not None:
        b_half = np.asarray(speed.c_prime(xh), dtype=float)
        cp_x = np.asarray(speed.c_prime(xg), dtype=float)
    else:
        cp_x = derivative_values(cvals, xg[1] - xg[0], order=4)
        b_half = CubicSpline(xg, cp_x)(xh)
    # b'(y) = c''(x(y)) * c(x(y))
    cpp = CubicSpline(xg, cp_x)(xh, 1)
    bprime_half = cpp * np.asarray(speed.c(xh), dtype=float)
    return drift_from_half(grid, b_half, bprime_half, speed.delta, speed.name)


def gaussian_speed(delta: float, width: float = 2.0) -> SpeedProfile:
    """c(x) = 1 + delta exp(-width x^2)."""
    return SpeedProfile(lambda x: 1.0 + delta * np.exp(-width * np.asarray(x) ** 2), delta,
                        lambda x: -2.0 * width * delta * np.asarray(x) * np.exp(-width * np.asarray(x) ** 2),
                        name=f"gaussian-speed(width={width})")
