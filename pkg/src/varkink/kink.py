"""Stationary kink -K'' + b K' = K - K^3 built from a perturbed fundamental system.

Steps: solve for the decaying solution Y_b = Y0 + V_b of the linearized operator
L_b = -d^2 + b d + 3H^2 - 1, build a second solution Z_b by reduction of order,
form the Green's kernel G_b and run Picard iteration for the correction H_delta.
A Newton solve of the same boundary-value problem serves as the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spsl

from .fredholm import (DEFAULT_TOL, RegimeError, SemiSeparableKernel, estimate_nu,
                       neumann_solve)
from .grid import (Grid, GridFn, cumulative_from_left, derivative_values,
                   second_derivative_values)
from .profiles import DriftProfile, SQ2, special_values

CONVENTIONS = ("consistent", "as-printed")


def measured_wronskian(Y, Yp, Z, Zp, y, window: float = 5.0) -> float:
    """Median of Y Z' - Y' Z over [0, window]; constant for a fundamental system."""
    mask = y <= window
    return float(np.median((Y * Zp - Yp * Z)[mask]))


def green_kernel(grid: Grid, Y, Z, wron, left_factor=None, right_factor=None, note=""):
    """Kernel of u = (Y(y) int_0^y Z F + Z(y) int_y^L Y F) / W with optional weights on w.

    left_factor multiplies the w-dependence on w < y, right_factor on w > y; they
    default to 1/wron.
    """
    if left_factor is None:
        left_factor = np.full_like(Y, 1.0 / wron)
    if right_factor is None:
        right_factor = np.full_like(Y, 1.0 / wron)
    return SemiSeparableKernel(grid, Y, Z * left_factor, Z, Y * right_factor, note)


@dataclass(frozen=True)
class FundamentalPair:
    Yb: GridFn
    Zb: GridFn
    Yb_prime: np.ndarray  # half-line samples
    Zb_prime: np.ndarray
    nu: float
    wronskian_defect: float
    report: object = None  # FredholmReport of the V_b solve


def vb_equation(drift: DriftProfile):
    """Kernel and forcing of V = g + G V for the correction V_b on [0, L]."""
    grid = drift.grid
    y = grid.y_half
    Y0, Y0p = special_values("Y0", y), special_values("Y0prime", y)
    Z0, Z0p = special_values("Z0", y), special_values("Z0prime", y)
    W0 = measured_wronskian(Y0, Y0p, Z0, Z0p, y)
    b, bp = drift.b.half, drift.b_prime.half
    # V = -int G0 b (Y0' + V'); the V' part is integrated by parts (b(0) = 0)
    kernel = SemiSeparableKernel(grid, Y0, (Z0p * b + Z0 * bp) / W0, Z0, (Y0p * b + Y0 * bp) / W0,
                                 "d/dw [G0(y,w) b(w)], envelope e^{-sqrt2 |y-w|} * delta e^{-sqrt2 w}")
    g0 = SemiSeparableKernel(grid, Y0, Z0 / W0, Z0, Y0 / W0)
    return kernel, -g0.apply(b * Y0p)


def solve_Vb(drift: DriftProfile, tol: float = DEFAULT_TOL) -> FundamentalPair:
    """Decaying solution Y_b = Y0 + V_b of L_b Y = 0 and Z_b = Y_b int_0^y p / Y_b^2."""
    grid = drift.grid
    y = grid.y_half
    h = grid.h
    Y0, Y0p = special_values("Y0", y), special_values("Y0prime", y)
    kernel, forcing = vb_equation(drift)
    nu = estimate_nu(kernel)
    if not nu < 1.0:
        raise RegimeError(f"perturbed fundamental system: nu = {nu:.4g} >= 1 (delta too large)")
    rep = neumann_solve(kernel, forcing, tol=tol * 1e-2, nu=nu)
    V = rep.solution
    Yb = Y0 + V
    Ybp = Y0p + derivative_values(V, h, order=4)
    p = drift.p.half
    integral = cumulative_from_left(p / Yb ** 2, h)
    Zb = Yb * integral
    Zbp = Ybp * integral + p / Yb
    Ybp_fd = derivative_values(Yb, h, order=4)
    Zbp_fd = derivative_values(Zb, h, order=4)
    wr = Yb * Zbp_fd - Ybp_fd * Zb
    defect = float(np.max(np.abs(wr - p)[: grid.m - 2]))
    return FundamentalPair(GridFn.from_half(grid, Yb, "even"), GridFn.from_half(grid, Zb, "odd"),
                           Ybp, Zbp, float(nu), defect, rep)


def green_b(Yb, Zb, p) -> SemiSeparableKernel:
    """G_b(y,w) = Y_b(y) Z_b(w)/p(w) for w < y and Z_b(y) Y_b(w)/p(w) for w > y.

    The Wronskian of (Y_b, Z_b) is p by construction, so no further factor is needed.
    """
    grid = Yb.grid
    Y, Z, pw = Yb.half, Zb.half, p.half
    return SemiSeparableKernel(grid, Y, Z / pw, Z, Y / pw, "e^{-sqrt2 |y-w|}")


@dataclass(frozen=True)
class KinkProfile:
    K: GridFn
    H_delta: GridFn
    K_prime: GridFn
    d: GridFn
    residual: float
    decay_constant: float
    contraction_factor: float
    iterations: int
    drift: DriftProfile
    nu_fundamental: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.K.grid

    def report(self) -> dict:
        return {"delta": self.drift.delta, "family": self.drift.family, "residual": self.residual,
                "decay_constant": self.decay_constant,
                "contraction_factor": self.contraction_factor, "iterations": self.iterations,
                "nu_fundamental": self.nu_fundamental}


def tilde_norm(eta, y) -> float:
    return float(np.max(np.exp(SQ2 * np.abs(y)) * np.abs(eta)))


def kink_residual(K, b, h, trim: float = 1.0) -> float:
    """max |-K'' + b K' - K + K^3| over [-L+trim, L-trim] with fourth-order stencils."""
    r = -second_derivative_values(K, h) + b * derivative_values(K, h, 4) - K + K ** 3
    n = int(round(trim / h))
    return float(np.max(np.abs(r[n:-n]))) if n > 0 else float(np.max(np.abs(r)))


def build_kink(drift: DriftProfile, tol: float = DEFAULT_TOL, max_iter: int = 200) -> KinkProfile:
    """Picard iteration H_delta <- h - int G_b (H_delta^3 + 3 H H_delta^2)."""
    if drift.delta > 0.05:
        raise RegimeError(f"delta = {drift.delta} > 0.05 is outside the contraction regime")
    grid = drift.grid
    y, h = grid.y_half, grid.h
    pair = solve_Vb(drift, tol)
    G = green_b(pair.Yb, pair.Zb, drift.p)
    H = special_values("H", y)
    Hp = special_values("Hprime", y)
    hsrc = -G.apply(drift.b.half * Hp)
    eta = hsrc.copy()
    changes = []
    rho = 0.0
    for it in range(1, max_iter + 1):
        new = hsrc - G.apply(eta ** 3 + 3.0 * H * eta ** 2)
        change = tilde_norm(new - eta, y)
        eta = new
        changes.append(change)
        if len(changes) >= 2 and changes[-2] > 0:
            ratio = changes[-1] / changes[-2]
            if changes[-2] > 1e3 * tol:
                rho = max(rho, ratio)
            if ratio >= 1.0 and changes[-1] > tol:
                raise RegimeError(f"kink map is not contracting: ratio {ratio:.3g} at iteration {it}")
        if change <= tol:
            break
    else:
        raise RegimeError(f"kink iteration did not converge in {max_iter} steps (change {changes[-1]:.3e})")
    Hd = GridFn.from_half(grid, eta, "odd")
    Hfull = GridFn.from_half(grid, H, "odd")
    K = Hfull + Hd
    Kp_half = Hp + derivative_values(eta, h, order=4)
    Kp = GridFn.from_half(grid, Kp_half, "even")
    d = GridFn.from_half(grid, 3.0 * eta ** 2 + 6.0 * H * eta, "even")
    residual = kink_residual(K.values, drift.b.values, h)
    if residual > 1e2 * max(tol, 1e-10):
        raise RegimeError(f"kink residual {residual:.3e} exceeds 100 x tolerance")
    Hdp = derivative_values(eta, h, order=4)
    decay = float(np.max(np.exp(SQ2 * y) * (np.abs(eta) + np.abs(Hdp))))
    return KinkProfile(K, Hd, Kp, d, residual, decay, rho, len(changes), drift, pair.nu)


def bvp_kink_oracle(drift: DriftProfile, tol: float = 1e-13, max_iter: int = 30) -> np.ndarray:
    """Newton solve of -eta'' + b eta' - eta + 3H^2 eta + 3H eta^2 + eta^3 = -b H' on [0, L].

    Fourth-order stencils, eta(0) = eta(L) = 0 with odd reflection for ghost nodes.
    Returns the half-line correction eta.
    """
    grid = drift.grid
    y, h = grid.y_half, grid.h
    n = grid.m + 1
    H, Hp = special_values("H", y), special_values("Hprime", y)
    b = drift.b.half
    D2 = _odd_reflected_stencil(n, np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h))
    D1 = _odd_reflected_stencil(n, np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h))
    A = (-D2 + sps.diags(b[1:-1]) @ D1).tocsc()
    rhs_src = -b[1:-1] * Hp[1:-1]
    pot = -1.0 + 3.0 * H[1:-1] ** 2
    eta = np.zeros(n - 2)
    for _ in range(max_iter):
        F = A @ eta + pot * eta + 3.0 * H[1:-1] * eta ** 2 + eta ** 3 - rhs_src
        J = A + sps.diags(pot + 6.0 * H[1:-1] * eta + 3.0 * eta ** 2)
        step = spsl.spsolve(J.tocsc(), F)
        eta -= step
        if np.max(np.abs(step)) < tol:
            break
    return np.concatenate([[0.0], eta, [0.0]])


def _odd_reflected_stencil(n: int, coefs) -> sps.csr_matrix:
    """Five-point stencil on interior nodes 1..n-2 with u_0 = u_{n-1} = 0 and odd ghosts."""
    m = n - 2
    rows, cols, vals = [], [], []
    for i in range(1, n - 1):
        for off, c in zip(range(-2, 3), coefs):
            j = i + off
            sign = 1.0
            if j < 0:
                j, sign = -j, -1.0
            elif j > n - 1:
                j, sign = 2 * (n - 1) - j, -1.0
            if j == 0 or j == n - 1:
                continue
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(sign * c)
    return sps.csr_matrix((vals, (rows, cols)), shape=(m, m))


@dataclass(frozen=True)
class Linearization:
    """L_K = -d^2 - beta d + 3K^2 - 1, self-adjoint in the weight exp(int_0^y beta).

    `beta` is the first-order coefficient of the linearized operator. Linearizing
    the field equation about K gives beta = -b (convention "consistent", weight 1/p);
    "as-printed" uses beta = +b with weight p.
    """

    kink: KinkProfile
    beta: GridFn
    beta_prime: GridFn
    weight: GridFn
    convention: str

    @property
    def grid(self) -> Grid:
        return self.kink.grid

    @property
    def potential(self) -> np.ndarray:
        return 3.0 * self.kink.K.values ** 2 - 1.0

    def apply(self, u) -> np.ndarray:
        """L_K u on the full grid with fourth-order stencils."""
        u = u.values if isinstance(u, GridFn) else np.asarray(u)
        h = self.grid.h
        return (-second_derivative_values(u, h) - self.beta.values * derivative_values(u, h, 4)
                + self.potential * u)


def linearize(kink: KinkProfile, convention: str = "consistent") -> Linearization:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; choose from {CONVENTIONS}")
    drift = kink.drift
    sign = -1.0 if convention == "consistent" else 1.0
    beta = sign * drift.b
    weight = drift.p ** -1 if sign < 0 else drift.p
    weight = GridFn(kink.grid, weight.values, "even")
    return Linearization(kink, GridFn(kink.grid, beta.values, "odd"),
                         GridFn(kink.grid, sign * drift.b_prime.values, "even"), weight, convention)
