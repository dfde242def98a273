"""Discrete spectrum of the linearized operator and the profiles built on it.

The even and odd eigenvalues are located by shooting: for each trial eigenvalue a
half-line Fredholm equation is solved around the unperturbed eigenfunction, and a
boundary functional (the slope at 0 for the even mode, the value at 0 for the odd
mode) is bisected to zero. A symmetric tridiagonal eigensolve is the oracle.

Everything is written for a generic linearization
    L_K = -d^2 - beta d + 3K^2 - 1,   weight w = exp(int_0^y beta),
so that L_K is self-adjoint in <f, g>_w = int w f g.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .fredholm import (DEFAULT_TOL, RegimeError, SemiSeparableKernel, estimate_nu,
                       neumann_solve)
from .grid import (Grid, GridFn, cumulative_from_left, cumulative_from_right,
                   derivative_values, parity_residual, project_out_p, simpson)
from .kink import Linearization, measured_wronskian
from .profiles import kcirc_constants, kcirc_prime_values, kcirc_values, special_values

BISECT_TOL = 1e-10


def _total(values, h):
    return float(cumulative_from_left(values, h)[-1])


class _Shooter:
    """Half-line Fredholm machinery around one unperturbed eigenpair (Y, Z, lam_ref)."""

    def __init__(self, lin: Linearization, parity: str):
        grid = lin.grid
        y = grid.y_half
        self.lin, self.grid, self.h = lin, grid, grid.h
        if parity == "even":
            names, self.lam_ref = ("Y0", "Y0prime", "Z0", "Z0prime"), 0.0
        else:
            names, self.lam_ref = ("Y1", "Y1prime", "Z1", "Z1prime"), 1.5
        self.Y, self.Yp, self.Z, self.Zp = (special_values(n, y) for n in names)
        self.W = measured_wronskian(self.Y, self.Yp, self.Z, self.Zp, y)
        self.beta = lin.beta.half
        self.beta_p = lin.beta_prime.half
        self.d = lin.kink.d.half
        self.parity = parity
        # d/dw (Z beta) and d/dw (Y beta)
        self.dZb = self.Zp * self.beta + self.Z * self.beta_p
        self.dYb = self.Yp * self.beta + self.Y * self.beta_p

    def kernel(self, lam):
        shift = lam - self.lam_ref - self.d
        return SemiSeparableKernel(self.grid, self.Y, (-self.dZb + shift * self.Z) / self.W,
                                   self.Z, (-self.dYb + shift * self.Y) / self.W,
                                   "e^{-c|y-w|} times (|beta| + |d| + |lam - lam_ref|)")

    def green(self):
        return SemiSeparableKernel(self.grid, self.Y, self.Z / self.W, self.Z, self.Y / self.W)

    def source(self, lam):
        return self.beta * self.Yp + (lam - self.lam_ref - self.d) * self.Y

    def solve(self, lam, tol=DEFAULT_TOL):
        """Correction U with (Y + U) solving L_K u = lam u on [0, L], plus the boundary functional.

        The functional is (1/W) int_0^L Y [beta (Y + U)' + (lam - lam_ref - d)(Y + U)], after
        integrating the U' term by parts. It equals U'(0) for the even problem
        (Z0'(0) = 1) and U(0) for the odd one (Z1(0) = 1).
        """
        kern = self.kernel(lam)
        nu = estimate_nu(kern)
        if not nu < 1.0:
            raise RegimeError(f"shooting kernel at lambda = {lam:.6g} has nu = {nu:.4g} >= 1")
        src = self.source(lam)
        forcing = self.green().apply(src)
        rep = neumann_solve(kern, forcing, tol=tol, nu=nu)
        U = rep.solution
        shift = lam - self.lam_ref - self.d
        functional = (_total(self.Y * src, self.h) + _total((-self.dYb + shift * self.Y) * U, self.h)) / self.W
        return U, functional, rep

    def bracket_halfwidth(self, C0=1.0, floor=1e-2):
        """max(C0 delta, 5 int |(d + beta') Y + beta Y'|, floor)."""
        integrand = np.abs((self.d + self.beta_p) * self.Y + self.beta * self.Yp)
        delta = self.lin.kink.drift.delta
        return max(C0 * delta, 5.0 * _total(integrand, self.h), floor)

    def find(self, tol=BISECT_TOL, solve_tol=DEFAULT_TOL, expansions=4):
        half = self.bracket_halfwidth()
        lo, hi = self.lam_ref - half, self.lam_ref + half
        flo = self.solve(lo, solve_tol)[1]
        fhi = self.solve(hi, solve_tol)[1]
        tries = 0
        while np.sign(flo) == np.sign(fhi):
            if tries >= expansions:
                raise RegimeError(f"no sign change of the {self.parity} boundary functional on "
                                  f"[{lo:.6g}, {hi:.6g}]: values {flo:.3e}, {fhi:.3e}")
            half *= 2.0
            lo, hi = self.lam_ref - half, self.lam_ref + half
            flo = self.solve(lo, solve_tol)[1]
            fhi = self.solve(hi, solve_tol)[1]
            tries += 1
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            fmid = self.solve(mid, solve_tol)[1]
            if fmid == 0.0:
                lo = hi = mid
                flo = fhi = 0.0
                break
            if np.sign(fmid) == np.sign(flo):
                lo, flo = mid, fmid
            else:
                hi, fhi = mid, fmid
        # one secant step inside the final bracket
        lam = lo if fhi == flo else lo - flo * (hi - lo) / (fhi - flo)
        U, fval, rep = self.solve(lam, solve_tol)
        return lam, U, fval, half


def shoot_even(lam: float, lin: Linearization, tol: float = DEFAULT_TOL):
    """(U on [0, L], U'(0)) for the even eigenvalue problem."""
    U, val, _ = _Shooter(lin, "even").solve(lam, tol)
    return U, val


def shoot_odd(lam: float, lin: Linearization, tol: float = DEFAULT_TOL):
    """(V on [0, L], V(0)) for the odd eigenvalue problem."""
    U, val, _ = _Shooter(lin, "odd").solve(lam, tol)
    return U, val


def find_lambda0(lin: Linearization, tol: float = BISECT_TOL):
    sh = _Shooter(lin, "even")
    lam, U, _, half = sh.find(tol)
    Ybar0 = GridFn.from_half(lin.grid, sh.Y + U, "even")
    return lam, Ybar0


def find_lambda1(lin: Linearization, tol: float = BISECT_TOL):
    sh = _Shooter(lin, "odd")
    lam, V, _, half = sh.find(tol)
    half_vals = sh.Y + V
    half_vals[0] = 0.0
    Ybar1 = GridFn.from_half(lin.grid, half_vals, "odd")
    nrm = np.sqrt(simpson(lin.weight.values * Ybar1.values ** 2, lin.grid.h))
    Ybar1 = GridFn(lin.grid, Ybar1.values / nrm, "odd")
    return lam, Ybar1, float(np.sqrt(lam))


def eigen_residual(lin: Linearization, lam: float, Y: GridFn, trim: float = 1.0) -> float:
    """max|L_K Y - lam Y| / max|Y| away from the ends."""
    r = lin.apply(Y) - lam * Y.values
    n = int(round(trim / lin.grid.h))
    return float(np.max(np.abs(r[n:-n])) / np.max(np.abs(Y.values)))


def matrix_oracle(lin: Linearization, n_eig: int = 20, continuum: float = 2.0, edge_tol: float = 1e-2):
    """Lowest eigenpairs of the weight-symmetrized second-order discretization.

    L_K u = -(1/w)(w u')' + V u is discretized conservatively with Dirichlet ends and
    conjugated by sqrt(w) into a symmetric tridiagonal matrix. Returns a list of
    (eigenvalue, parity) and the index where the continuum edge starts.
    """
    grid = lin.grid
    h = grid.h
    logw = np.log(lin.weight.values)
    mid = 0.5 * (logw[:-1] + logw[1:])
    mid[1:-1] = (-logw[:-3] + 9.0 * logw[1:-2] + 9.0 * logw[2:-1] - logw[3:]) / 16.0
    w_mid = np.exp(mid)
    w = lin.weight.values
    V = lin.potential
    # interior unknowns 1..N-2
    diag = V[1:-1] + (w_mid[1:] + w_mid[:-1]) / (w[1:-1] * h * h)
    off = -w_mid[1:-1] / (h * h * np.sqrt(w[1:-2] * w[2:-1]))
    k = min(n_eig, diag.size)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
    out = []
    for lam, vec in zip(vals, vecs.T):
        even = np.linalg.norm(vec - vec[::-1]) < np.linalg.norm(vec + vec[::-1])
        out.append((float(lam), "even" if even else "odd"))
    edge = next((i for i, (lam, _) in enumerate(out) if lam >= continuum - edge_tol), len(out))
    return out, edge


def resolvent_L6(F: GridFn):
    """G with (-L + 6) G = F, G(y) = (1/12) Im(k(y) int_{-L}^y conj(k) F + conj(k)(y) int_y^L k F).

    Returns (G, <k, F>, <Im k, F>).
    """
    grid = F.grid
    h = grid.h
    k = special_values("k", grid.y)
    Fv = F.values
    left = cumulative_from_left(np.conj(k) * Fv, h)
    right = cumulative_from_right(k * Fv, h)
    G = np.imag(k * left + np.conj(k) * right) / 12.0
    kF = complex(simpson(k * Fv, h))
    imkF = float(simpson(k.imag * Fv, h))
    par = F.parity
    if par in ("odd", "even"):
        G = 0.5 * (G + (-1.0 if par == "odd" else 1.0) * G[::-1])
    return GridFn(grid, G, par), kF, imkF


@dataclass
class SpectralData:
    lambda0: float
    lambda1: float
    mu: float
    Ybar0: GridFn
    Ybar1: GridFn
    fbar: GridFn
    q: GridFn
    hbar: GridFn
    gbar: GridFn
    a_const: float
    a0_const: float
    psi_f_imk: float
    oracle_gap: float
    weight: GridFn
    lin: Linearization
    f0: GridFn = None  # constant-speed source profile
    g0: GridFn = None  # its resolvent profile
    oracle: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.Ybar1.grid

    def summary(self) -> dict:
        return {"lambda0": self.lambda0, "lambda1": self.lambda1, "mu": self.mu,
                "a": self.a_const, "a0": self.a0_const, "psi_f_imk": self.psi_f_imk,
                "oracle_gap": self.oracle_gap}


def wproject(f: GridFn, direction: GridFn, weight: GridFn) -> GridFn:
    return project_out_p(f, direction, weight)


def source_profile(K: GridFn, Y1: GridFn, weight: GridFn) -> GridFn:
    """(3/2)(K Y1^2 - <K Y1^2, Y1>_w Y1), the internal-mode self-interaction source."""
    raw = K * Y1 * Y1
    return GridFn(K.grid, 1.5 * wproject(raw, Y1, weight).values, "odd", check_parity=False)


def build_fbar_q(Ybar1: GridFn, lin: Linearization, tol: float = DEFAULT_TOL):
    fbar = source_profile(lin.kink.K, Ybar1, lin.weight)
    sh = _Shooter(lin, "even")
    kern = sh.kernel(0.0)
    forcing = sh.green().apply(fbar.half)
    rep = neumann_solve(kern, forcing, tol=tol)
    q_half = rep.solution.copy()
    q_half[0] = 0.0
    q = GridFn.from_half(lin.grid, q_half, "odd")
    return fbar, q


def golden_ratio(src: GridFn, weight_inv, grid: Grid):
    """-<(psi f' + f psi'/2) / w, Im k> / <psi' f / w, Im k> and its denominator."""
    y, h = grid.y, grid.h
    psi, psip = special_values("psi", y), special_values("psiprime", y)
    imk = special_values("k", y).imag
    fp = derivative_values(src.values, h, order=4)
    num = simpson((psi * fp + 0.5 * psip * src.values) * weight_inv * imk, h)
    den = simpson(psip * src.values * weight_inv * imk, h)
    return float(-num / den), float(den)


def unperturbed_source(grid: Grid) -> GridFn:
    H = GridFn.from_half(grid, special_values("H", grid.y_half), "odd")
    Y1 = GridFn.from_half(grid, special_values("Y1", grid.y_half), "odd")
    return source_profile(H, Y1, GridFn(grid, np.ones(grid.N), "even"))


def golden_rule_constants(fbar: GridFn, weight: GridFn, min_denominator: float = 0.3):
    """(a, a0, <psi' f, Im k>) with f the constant-speed source and fbar the perturbed one."""
    grid = fbar.grid
    f0 = unperturbed_source(grid)
    a, den = golden_ratio(f0, 1.0, grid)
    a0, den0 = golden_ratio(fbar, 1.0 / weight.values, grid)
    if abs(den0) < min_denominator:
        raise RegimeError(f"golden-rule denominator {den0:.4g} is below {min_denominator} in magnitude")
    return a, a0, den


def source_of_hbar(src: GridFn, const: float, weight_inv) -> GridFn:
    """(psi f' + (const + 1/2) psi' f) / w."""
    grid = src.grid
    y, h = grid.y, grid.h
    psi, psip = special_values("psi", y), special_values("psiprime", y)
    fp = derivative_values(src.values, h, order=4)
    vals = (psi * fp + (const + 0.5) * psip * src.values) * weight_inv
    return GridFn(grid, vals, "odd", check_parity=False)


def build_g(grid: Grid, a: float):
    """g with (L - 6) g = psi f' + (a + 1/2) psi' f for the constant-speed source f."""
    f0 = unperturbed_source(grid)
    ell = source_of_hbar(f0, a, 1.0)
    G, _, _ = resolvent_L6(ell)
    return f0, -G


def build_hbar_gbar(fbar: GridFn, a0: float, mu: float, lin: Linearization, tol: float = DEFAULT_TOL):
    """Odd hbar with L_K hbar - 4 mu^2 hbar = (psi fbar' + (a0 + 1/2) psi' fbar) / w.

    hbar = h + eta, where (L - 6) h = ell comes from the explicit resolvent and eta solves
    a half-line Fredholm equation with the oscillatory kernel built from k_circ.
    Returns (hbar, gbar = w hbar, info).
    """
    grid = lin.grid
    h = grid.h
    y = grid.y_half
    ell = source_of_hbar(fbar, a0, 1.0 / lin.weight.values)
    R, kF, imk_ell = resolvent_L6(ell)
    hres = -R.values
    hh = grid.half(hres)
    hhp = grid.half(derivative_values(hres, h, order=4))
    kc = kcirc_values(mu, y)
    kcp = kcirc_prime_values(mu, y)
    Yr, Yrp, Zi, Zip = kc.real, kcp.real, kc.imag, kcp.imag
    c0 = measured_wronskian(Yr, Yrp, Zi, Zip, y)
    beta, betap = lin.beta.half, lin.beta_prime.half
    d = lin.kink.d.half
    src = beta * hhp - d * hh + (4.0 * mu * mu - 6.0) * hh
    green = SemiSeparableKernel(grid, Yr, Zi / c0, Zi, Yr / c0)
    forcing = green.apply(src)
    kern = SemiSeparableKernel(grid, Yr, (-(Zip * beta + Zi * betap) - d * Zi) / c0,
                               Zi, (-(Yrp * beta + Yr * betap) - d * Yr) / c0,
                               "oscillatory, times (|beta| + |d|)")
    rep = neumann_solve(kern, forcing, tol=tol)
    eta = rep.solution.copy()
    eta[0] = 0.0
    hbar = GridFn(grid, hres + grid.extend(eta, "odd"), "odd", check_parity=False)
    gbar = GridFn(grid, lin.weight.values * hbar.values, "odd", check_parity=False)
    # far field of eta is Re k_circ(y) * (int_0^inf Im k_circ * F) / c0; report its amplitude
    full_src = src + beta * derivative_values(eta, h, order=4) - d * eta
    tail = float(abs(_total(Zi * full_src, h) / c0))
    info = {"imk_ell": imk_ell, "k_ell": kF, "eta_nu": rep.nu, "tail_amplitude": tail,
            "kcirc_wronskian": c0}
    return hbar, gbar, info


def hbar_residual(hbar: GridFn, fbar: GridFn, a0: float, mu: float, lin: Linearization, trim=1.0):
    ell = source_of_hbar(fbar, a0, 1.0 / lin.weight.values)
    r = lin.apply(hbar) - 4.0 * mu * mu * hbar.values - ell.values
    n = int(round(trim / lin.grid.h))
    return float(np.max(np.abs(r[n:-n])))


def compute_spectrum(lin: Linearization, tol: float = BISECT_TOL, oracle: bool = True) -> SpectralData:
    """Full pipeline: eigenpairs, fbar, q, constants, hbar, gbar and the matrix cross-check."""
    lam0, Y0bar = find_lambda0(lin, tol)
    lam1, Y1bar, mu = find_lambda1(lin, tol)
    fbar, q = build_fbar_q(Y1bar, lin)
    a, a0, den = golden_rule_constants(fbar, lin.weight)
    hbar, gbar, info = build_hbar_gbar(fbar, a0, mu, lin)
    f0, g0 = build_g(lin.grid, a)
    gap = float("nan")
    pairs = []
    if oracle:
        pairs, edge = matrix_oracle(lin)
        even = [v for v, par in pairs if par == "even"]
        odd = [v for v, par in pairs if par == "odd"]
        gap = max(abs(even[0] - lam0), abs(odd[0] - lam1))
        info["continuum_edge_index"] = edge
    info["eigen_residual0"] = eigen_residual(lin, lam0, Y0bar)
    info["eigen_residual1"] = eigen_residual(lin, lam1, Y1bar)
    info["hbar_residual"] = hbar_residual(hbar, fbar, a0, mu, lin)
    info["parity_residual_Ybar0"] = parity_residual(Y0bar.values, "even")
    return SpectralData(lam0, lam1, mu, Y0bar, Y1bar, fbar, q, hbar, gbar, a, a0, den, gap,
                        lin.weight, lin, f0, g0, pairs, info)
