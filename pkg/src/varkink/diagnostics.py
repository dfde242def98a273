"""Spectral decomposition of trajectories, virial functionals and coercivity.

Notation: L_K = -d^2 - beta d + 3K^2 - 1 is self-adjoint in <f, g>_w = int w f g,
Ybar1 is the w-normalized odd eigenfunction with eigenvalue mu^2, fbar the
internal-mode source, q solves L_K q = fbar and gbar = w hbar.

Decomposition of a state (phi1, phi2):
    z1 = <phi1, Ybar1>_w, z2 = <phi2, Ybar1>_w / mu,
    u = phi - z Ybar1,  v1 = u1 + |z|^2 q,  v2 = u2,
    alpha = z1^2 - z2^2, beta = 2 z1 z2.
The system then reads
    v1' = v2 + F1,  v2' = -L_K v1 - alpha fbar + F2,
    alpha' = 2 mu beta + F_alpha,  beta' = -2 mu alpha + F_beta,
and d/dt(I + J) = -Dtilde(v1, alpha) + R with
    Dtilde = Btilde - int psi beta_c v1'^2 + 1/4 int (psi' beta_c)' v1^2
             + a0 alpha int psi' fbar v1 + alpha^2 int fbar gbar,
where beta_c is the drift coefficient of L_K.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .grid import Grid, GridError, GridFn, derivative_values, omega_weight, simpson
from .profiles import special_values

ORTH_FLAG = 1e-6
TIMESERIES_COLUMNS = ("t", "E", "z1", "z2", "alpha", "beta", "zsq", "I", "J", "K_func", "H_func",
                      "H1w2", "L2w2", "local_norm")


class DiagnosticsContext:
    """Profiles reused at every sample: psi and derivatives, K K', fbar, q, gbar, weights."""

    def __init__(self, spec, kappa: float = 0.0, sigma: float | None = None, nonlinear: bool = True):
        lin = spec.lin
        grid = spec.grid
        y, h = grid.y, grid.h
        self.spec, self.grid, self.h = spec, grid, h
        self.mu = spec.mu
        self.w = spec.weight.values
        self.Y1 = spec.Ybar1.values
        self.wY1 = self.w * self.Y1
        self.K = lin.kink.K.values
        self.Kp = lin.kink.K_prime.values
        self.bc = lin.beta.values
        self.bcp = lin.beta_prime.values
        self.psi = special_values("psi", y)
        self.psi1 = special_values("psiprime", y)
        self.psi2 = special_values("psi2", y)
        self.psi3 = special_values("psi3", y)
        self.zeta = special_values("zeta", y)
        self.theta = special_values("theta", y)
        self.omega = omega_weight(grid)
        self.fbar = spec.fbar.values
        self.q = spec.q.values
        self.gbar = spec.gbar.values
        self.a0 = spec.a0_const
        self.fg = float(simpson(self.fbar * self.gbar, h))
        self.psi_beta = self.psi * self.bc
        self.dpsi1_beta = self.psi2 * self.bc + self.psi1 * self.bcp
        self.kappa = float(kappa)
        self.sigma = float(kappa / 100.0 if sigma is None else sigma)
        self.nonlinear = nonlinear
        self.local = (np.abs(y) <= 10.0 + 1e-12).astype(float)

    def integral(self, values) -> float:
        return float(simpson(values, self.h))

    def d(self, values):
        return derivative_values(values, self.h, order=4)


@dataclass
class DecompState:
    t: float
    z1: float
    z2: float
    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    alpha: float
    beta: float
    zsq: float
    gamma_prod: float
    orth_residual: float = 0.0


def decompose(state, ctx: DiagnosticsContext) -> DecompState:
    """Split a FieldState into internal-mode coordinates and the radiation part."""
    phi1, phi2 = state.phi1.values, state.phi2.values
    z1 = ctx.integral(phi1 * ctx.wY1)
    z2 = ctx.integral(phi2 * ctx.wY1) / ctx.mu
    u1 = phi1 - z1 * ctx.Y1
    u2 = phi2 - ctx.mu * z2 * ctx.Y1
    zsq = z1 * z1 + z2 * z2
    v1 = u1 + zsq * ctx.q
    alpha, beta = z1 * z1 - z2 * z2, 2.0 * z1 * z2
    scale = np.sqrt(ctx.integral(ctx.w * (phi1 ** 2 + phi2 ** 2))) + 1e-300
    orth = max(abs(ctx.integral(v1 * ctx.wY1)), abs(ctx.integral(u2 * ctx.wY1))) / scale
    if orth > ORTH_FLAG and scale > 1e-200:
        raise GridError(f"decomposition orthogonality residual {orth:.3e} exceeds {ORTH_FLAG}: "
                        "spectral data inconsistent with the grid")
    return DecompState(float(state.t), z1, z2, u1, u2, v1, u2, alpha, beta, zsq, alpha * beta, orth)


def forcing_terms(dec: DecompState, ctx: DiagnosticsContext):
    """(F_alpha, F_beta, F1, F2) of the decomposed system."""
    if not ctx.nonlinear:
        zero = np.zeros_like(dec.u1)
        return 0.0, 0.0, zero, zero.copy()
    phi1 = dec.z1 * ctx.Y1 + dec.u1
    N = 3.0 * ctx.K * phi1 ** 2 + phi1 ** 3
    bracket = ctx.integral(N * ctx.wY1)
    F_alpha = 2.0 / ctx.mu * dec.z2 * bracket
    F_beta = -2.0 / ctx.mu * dec.z1 * bracket
    Nu = 3.0 * ctx.K * (dec.u1 ** 2 + 2.0 * dec.u1 * dec.z1 * ctx.Y1) + phi1 ** 3
    F2 = -(Nu - ctx.integral(Nu * ctx.wY1) * ctx.Y1)
    F1 = -ctx.q * F_alpha
    return F_alpha, F_beta, F1, F2


def virial_eval(dec: DecompState, ctx: DiagnosticsContext):
    """(I, J, K_func, H_func) at one sample."""
    v1, v2 = dec.v1, dec.v2
    dv1 = ctx.d(v1)
    I = ctx.integral(ctx.psi * dv1 * v2 + 0.5 * ctx.psi1 * v1 * v2)
    J = dec.alpha * ctx.integral(v2 * ctx.gbar) - 2.0 * ctx.mu * dec.beta * ctx.integral(v1 * ctx.gbar)
    cross = ctx.integral(ctx.theta * v1 * v2)
    K_func = ctx.kappa / (4.0 * ctx.mu) * dec.gamma_prod - (I + J) + 2.0 * ctx.sigma * cross
    H_func = ctx.integral((dv1 ** 2 + 2.0 * v1 ** 2 + v2 ** 2) * ctx.theta)
    return I, J, K_func, H_func


def form_parts(v, ctx: DiagnosticsContext):
    """(Btilde, drift part) of Dtilde for a radiation profile v."""
    dv = ctx.d(v)
    Bt = ctx.integral(ctx.psi1 * dv ** 2 - 0.25 * ctx.psi3 * v ** 2 - 3.0 * ctx.psi * ctx.K * ctx.Kp * v ** 2)
    drift = ctx.integral(-ctx.psi_beta * dv ** 2 + 0.25 * ctx.dpsi1_beta * v ** 2)
    return Bt, drift


def d_tilde(v, alpha: float, ctx: DiagnosticsContext) -> float:
    Bt, drift = form_parts(v, ctx)
    return (Bt + drift + ctx.a0 * alpha * ctx.integral(ctx.psi1 * ctx.fbar * v)
            + alpha ** 2 * ctx.fg)


def remainder(dec: DecompState, forcing, ctx: DiagnosticsContext) -> float:
    """R = int g(alpha F2 - 2 mu beta F1) + int v2(psi F1' + psi'F1/2 + g F_a) - int v1(psi F2' + psi'F2/2 + 2 mu g F_b)."""
    Fa, Fb, F1, F2 = forcing
    g = ctx.gbar
    r = ctx.integral(g * (dec.alpha * F2 - 2.0 * ctx.mu * dec.beta * F1))
    r += ctx.integral(dec.v2 * (ctx.psi * ctx.d(F1) + 0.5 * ctx.psi1 * F1 + g * Fa))
    r -= ctx.integral(dec.v1 * (ctx.psi * ctx.d(F2) + 0.5 * ctx.psi1 * F2 + 2.0 * ctx.mu * g * Fb))
    return r


def weighted_sq_norms(dec: DecompState, ctx: DiagnosticsContext):
    """(||v1||^2_{H1_omega}, ||v2||^2_{L2_omega}, ||v1||^2_{L2_omega})."""
    dv1 = ctx.d(dec.v1)
    l2v1 = ctx.integral(ctx.omega * dec.v1 ** 2)
    return ctx.integral(ctx.omega * dv1 ** 2) + l2v1, ctx.integral(ctx.omega * dec.v2 ** 2), l2v1


@dataclass
class VirialSeries:
    columns: dict = field(default_factory=dict)

    def append(self, row: dict) -> None:
        for k, v in row.items():
            self.columns.setdefault(k, []).append(v)

    def __getitem__(self, key) -> np.ndarray:
        return np.asarray(self.columns[key], dtype=float)

    def __len__(self) -> int:
        return len(self.columns.get("t", []))

    def validate(self) -> None:
        for k, v in self.columns.items():
            if not np.all(np.isfinite(np.asarray(v, dtype=float))):
                raise GridError(f"non-finite values in virial series column {k!r}")
        if len(self) > 1 and not np.all(np.diff(self["t"]) > 0):
            raise GridError("virial series sampling times are not strictly increasing")

    def to_csv(self, path, columns=TIMESERIES_COLUMNS) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(columns)
            for i in range(len(self)):
                wr.writerow([f"{float(self.columns[c][i]):.17g}" for c in columns])


class VirialRecorder:
    """Callback for dynamics.run collecting the per-sample virial data."""

    def __init__(self, ctx: DiagnosticsContext, energy_fn=None, keep_states: bool = False):
        self.ctx = ctx
        self.energy_fn = energy_fn
        self.series = VirialSeries()
        self.keep_states = keep_states
        self.decomps = []

    def __call__(self, state):
        ctx = self.ctx
        dec = decompose(state, ctx)
        forcing = forcing_terms(dec, ctx)
        I, J, K_func, H_func = virial_eval(dec, ctx)
        H1w2, L2w2, L2v1 = weighted_sq_norms(dec, ctx)
        Bt, drift = form_parts(dec.v1, ctx)
        Dt = (Bt + drift + ctx.a0 * dec.alpha * ctx.integral(ctx.psi1 * ctx.fbar * dec.v1)
              + dec.alpha ** 2 * ctx.fg)
        R = remainder(dec, forcing, ctx)
        phi1, phi2 = state.phi1.values, state.phi2.values
        dphi1 = ctx.d(phi1)
        local = np.sqrt(ctx.integral(ctx.local * (dphi1 ** 2 + phi1 ** 2 + phi2 ** 2)))
        E = self.energy_fn(phi1, phi2) if self.energy_fn is not None else float("nan")
        Fa, Fb = forcing[0], forcing[1]
        row = {"t": dec.t, "E": E, "z1": dec.z1, "z2": dec.z2, "alpha": dec.alpha, "beta": dec.beta,
               "zsq": dec.zsq, "I": I, "J": J, "K_func": K_func, "H_func": H_func, "H1w2": H1w2,
               "L2w2": L2w2, "local_norm": local, "gamma_prod": dec.gamma_prod,
               "z4": dec.zsq ** 2, "Dtilde": Dt, "Btilde": Bt, "drift_part": drift, "R": R,
               "F_alpha": Fa, "F_beta": Fb, "L2w2_v1": L2v1,
               "cross": ctx.integral(ctx.theta * dec.v1 * dec.v2), "orth": dec.orth_residual}
        self.series.append(row)
        if self.keep_states:
            self.decomps.append(dec)
        return None


def time_derivative(values, dt: float):
    """Fourth-order centered difference; returns (interior indices, derivative)."""
    f = np.asarray(values, dtype=float)
    if f.size < 5:
        raise GridError("need at least 5 samples for a time derivative")
    d = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * dt)
    return np.arange(2, f.size - 2), d


def _uniform_step(t) -> float:
    dts = np.diff(t)
    step = float(np.median(dts))
    if not np.allclose(dts, step, rtol=1e-6, atol=1e-12):
        raise GridError("samples are not uniformly spaced in time")
    return step


def _window(series: VirialSeries, t_max: float | None):
    t = series["t"]
    n = t.size if t_max is None else int(np.searchsorted(t, t_max + 1e-12, side="right"))
    # the final sample of a run may fall off the uniform lattice
    if n >= 3 and not np.isclose(t[n - 1] - t[n - 2], t[1] - t[0], rtol=1e-6):
        n -= 1
    return n


def check_virial_identity(series: VirialSeries, t_max: float | None = None, max_spacing: float = 0.05):
    """Compare d/dt(I + J) by finite differences with -Dtilde + R evaluated from states.

    Returns (max relative defect, detail) where the defect is scaled by sup |-Dtilde + R|.
    """
    n = _window(series, t_max)
    t = series["t"][:n]
    step = _uniform_step(t)
    if step > max_spacing + 1e-12:
        raise GridError(f"sample spacing {step:.3g} exceeds {max_spacing} for the virial check")
    idx, lhs = time_derivative((series["I"] + series["J"])[:n], step)
    rhs = (-series["Dtilde"] + series["R"])[:n][idx]
    scale = float(np.max(np.abs(rhs)))
    if scale == 0.0:
        defect = float(np.max(np.abs(lhs)))
        return defect, {"scale": 0.0, "lhs": lhs, "rhs": rhs, "t": t[idx]}
    defect = float(np.max(np.abs(lhs - rhs)) / scale)
    return defect, {"scale": scale, "lhs": lhs, "rhs": rhs, "t": t[idx]}


def check_linear_virial(series: VirialSeries, t_max: float | None = None):
    """Without nonlinearity and internal mode: dI/dt = -Btilde - drift part."""
    n = _window(series, t_max)
    t = series["t"][:n]
    step = _uniform_step(t)
    idx, lhs = time_derivative(series["I"][:n], step)
    rhs = (-series["Btilde"] - series["drift_part"])[:n][idx]
    scale = float(np.max(np.abs(rhs))) or 1.0
    return float(np.max(np.abs(lhs - rhs)) / scale)


def check_zsq_rate(series: VirialSeries, t_max: float | None = None) -> float:
    """max |d/dt |z|^2 + F_alpha| / sup |F_alpha| with finite-difference time derivative."""
    n = _window(series, t_max)
    step = _uniform_step(series["t"][:n])
    idx, lhs = time_derivative(series["zsq"][:n], step)
    Fa = series["F_alpha"][:n][idx]
    scale = float(np.max(np.abs(Fa))) or 1.0
    return float(np.max(np.abs(lhs + Fa)) / scale)


# ---------------------------------------------------------------- quadratic forms

def quadratic_forms(v: GridFn, alpha: float, spec, ctx: DiagnosticsContext | None = None):
    """(B, Btilde, D, Dtilde) for an odd profile v.

    B and D are the constant-speed forms built from H, the constant-speed source f and
    its resolvent profile g with the constant a; Btilde and Dtilde use K, fbar, gbar, a0.
    """
    ctx = ctx or DiagnosticsContext(spec)
    vals = v.values if isinstance(v, GridFn) else np.asarray(v)
    y = ctx.grid.y
    H, Hp = special_values("H", y), special_values("Hprime", y)
    dv = ctx.d(vals)
    B = ctx.integral(ctx.psi1 * dv ** 2 - 0.25 * ctx.psi3 * vals ** 2 - 3.0 * ctx.psi * H * Hp * vals ** 2)
    f0, g0 = spec.f0.values, spec.g0.values
    D = (B + spec.a_const * alpha * ctx.integral(ctx.psi1 * f0 * vals)
         + alpha ** 2 * ctx.integral(f0 * g0))
    Bt, _ = form_parts(vals, ctx)
    Dt = d_tilde(vals, alpha, ctx)
    return B, Bt, D, Dt


@dataclass
class CoercivityReport:
    kappa_B: float
    kappa_D: float
    delta: float
    grid: dict
    kappa_B_unconstrained: float = float("nan")
    norm_equivalence: float = float("nan")
    sampled_min_B: float = float("nan")

    def to_json_dict(self) -> dict:
        return {"delta": self.delta, "kappa_B": self.kappa_B, "kappa_D": self.kappa_D, "grid": self.grid}


class _CoarseForms:
    """Quadratic forms on odd functions sampled on the coarse half-grid nodes 1..m'-1.

    Full-line integrals of even integrands are twice the half-line ones; derivatives
    live on cell midpoints with midpoint quadrature (second order).
    """

    def __init__(self, spec, stride: int = 4):
        grid = spec.grid
        if grid.m % stride:
            raise GridError(f"stride {stride} does not divide the half-grid size {grid.m}")
        self.spec = spec
        lin = spec.lin
        self.hc = grid.h * stride
        yh = grid.y_half[::stride]
        self.y = yh[1:-1]
        self.ymid = 0.5 * (yh[:-1] + yh[1:])
        self.n = self.y.size
        sub = lambda arr: grid.half(arr)[::stride]
        mid = lambda arr: grid.half(arr)[stride // 2::stride]
        self.K, self.Kp = sub(lin.kink.K.values)[1:-1], sub(lin.kink.K_prime.values)[1:-1]
        self.bc, self.bcp = sub(lin.beta.values)[1:-1], sub(lin.beta_prime.values)[1:-1]
        self.w = sub(spec.weight.values)[1:-1]
        self.Y1 = sub(spec.Ybar1.values)[1:-1]
        self.fbar = sub(spec.fbar.values)[1:-1]
        self.bc_mid = mid(lin.beta.values)
        # first-difference matrix: nodes 1..n (zero at both ends) -> n+1 midpoints
        n = self.n
        Dm = np.zeros((n + 1, n))
        idx = np.arange(n)
        Dm[idx, idx] = 1.0
        Dm[idx + 1, idx] = -1.0
        self.Dm = Dm / self.hc
        self.zeta_nodes = special_values("zeta", self.y)

    def potential_matrix(self, with_drift: bool):
        y, ym = self.y, self.ymid
        psi, psi1, psi2, psi3 = (special_values(n, y) for n in ("psi", "psiprime", "psi2", "psi3"))
        psi1_mid = special_values("psiprime", ym)
        grad_coef = psi1_mid.copy()
        pot = -0.25 * psi3 - 3.0 * psi * self.K * self.Kp
        if with_drift:
            grad_coef = grad_coef - special_values("psi", ym) * self.bc_mid
            pot = pot + 0.25 * (psi2 * self.bc + psi1 * self.bcp)
        A = self.Dm.T @ (grad_coef[:, None] * self.Dm) + np.diag(pot)
        return 2.0 * self.hc * A

    def metric(self):
        Dz = self.Dm * self.zeta_nodes[None, :]
        return 2.0 * self.hc * (Dz.T @ Dz)

    def h1_omega_metric(self):
        om_mid = 1.0 / np.cosh(self.ymid / (2.0 * np.sqrt(2.0)))
        om = 1.0 / np.cosh(self.y / (2.0 * np.sqrt(2.0)))
        return 2.0 * self.hc * (self.Dm.T @ (om_mid[:, None] * self.Dm) + np.diag(om))

    def constraint(self):
        return 2.0 * self.hc * self.w * self.Y1


def _lowest(A, M, basis=None) -> float:
    if basis is not None:
        A = basis.T @ A @ basis
        M = basis.T @ M @ basis
    M = 0.5 * (M + M.T)
    A = 0.5 * (A + A.T)
    try:
        val = sla.eigh(A, M, subset_by_index=[0, 0], eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise GridError(f"metric is not positive definite after projection: {exc}") from exc
    return float(val[0])


def measure_coercivity(spec, stride: int = 4, n_samples: int = 0, seed: int = 0x5EED) -> CoercivityReport:
    """Smallest constrained Rayleigh quotients of Btilde and Dtilde against |d(zeta v)|^2."""
    forms = _CoarseForms(spec, stride)
    M = forms.metric()
    con = forms.constraint()
    basis = sla.null_space(con[None, :])
    AB = forms.potential_matrix(with_drift=False)
    kappa_B = _lowest(AB, M, basis)
    kappa_B_free = _lowest(AB, M)
    # Dtilde on (v, alpha): metric alpha^2 + |d(zeta v)|^2
    AD = forms.potential_matrix(with_drift=True)
    cross = spec.a0_const * 2.0 * forms.hc * special_values("psiprime", forms.y) * forms.fbar
    fg = float(simpson(spec.fbar.values * spec.gbar.values, spec.grid.h))
    n = forms.n
    Abig = np.zeros((n + 1, n + 1))
    Abig[:n, :n] = AD
    Abig[:n, n] = Abig[n, :n] = 0.5 * cross
    Abig[n, n] = fg
    Mbig = np.zeros((n + 1, n + 1))
    Mbig[:n, :n] = M
    Mbig[n, n] = 1.0
    big_basis = np.zeros((n + 1, n))
    big_basis[:n, : n - 1] = basis
    big_basis[n, n - 1] = 1.0
    kappa_D = _lowest(Abig, Mbig, big_basis)
    # ||v||^2_{H1_omega} <= c |d(zeta v)|^2: c is the largest eigenvalue of the pencil
    Hm = forms.h1_omega_metric()
    Hp, Mp = basis.T @ Hm @ basis, basis.T @ M @ basis
    c_eq = float(sla.eigh(0.5 * (Hp + Hp.T), 0.5 * (Mp + Mp.T), eigvals_only=True,
                          subset_by_index=[Hp.shape[0] - 1, Hp.shape[0] - 1])[0])
    sampled = float("nan")
    if n_samples:
        sampled = float(np.min(sample_quotients(forms, AB, M, con, n_samples, seed)))
    grid = spec.grid
    return CoercivityReport(kappa_B, kappa_D, float(spec.lin.kink.drift.delta),
                            {"L": grid.L, "h": grid.h, "stride": stride, "h_coarse": forms.hc,
                             "unknowns": n}, kappa_B_free, c_eq, sampled)


def random_odd_profiles(y, n_samples: int, rng, max_centers: int = 4):
    """Smooth random odd profiles on the positive nodes y: sums of odd Gaussian pairs."""
    out = np.empty((n_samples, y.size))
    for i in range(n_samples):
        k = rng.integers(1, max_centers + 1)
        prof = np.zeros_like(y)
        for _ in range(k):
            c = rng.uniform(0.0, 12.0)
            s = rng.uniform(0.5, 4.0)
            amp = rng.normal()
            prof += amp * (np.exp(-((y - c) / s) ** 2) - np.exp(-((y + c) / s) ** 2))
        out[i] = prof
    return out


def sample_quotients(forms: _CoarseForms, A, M, con, n_samples: int, seed: int):
    """Rayleigh quotients A[v]/M[v] of random smooth odd v projected onto the constraint."""
    rng = np.random.default_rng(seed)
    V = random_odd_profiles(forms.y, n_samples, rng)
    V -= np.outer(V @ con, con) / (con @ con)
    num = np.einsum("ij,jk,ik->i", V, A, V)
    den = np.einsum("ij,jk,ik->i", V, M, V)
    return num / den


# ---------------------------------------------------------------- monitors

@dataclass
class MonitorResult:
    name: str
    constant: float
    train_violation: float
    validate_violation: float
    ok: bool


def _fit_subtractive(lhs, main, bound):
    """Smallest C >= 0 with lhs >= main - C bound on the samples."""
    mask = bound > 0
    need = np.where(mask, (main - lhs) / np.where(mask, bound, 1.0), 0.0)
    return max(float(np.max(need)), 0.0)


def monitor_inequalities(series: VirialSeries, mu: float, epsilon: float, kappa: float,
                         norm_equivalence: float = 1.0, slack: float = 2.0, t_max: float | None = None):
    """Fit the free constant of each virial inequality on the first half, validate on the second.

    Validation uses the fitted constant loosened by `slack` (C -> slack C for error
    terms, c -> c / slack for the lower bound of dK/dt). A violation is the largest
    positive value of (required lower bound - observed) scaled by the sup of the
    observed bound terms; <= 0 means the inequality held. With a sponge layer the
    inequalities only apply before radiation reaches it, hence `t_max`.
    """
    series.validate()
    n = _window(series, t_max)
    t = series["t"][:n]
    step = _uniform_step(t)
    col = lambda k: series[k][:n]
    idx, dgamma = time_derivative(col("gamma_prod"), step)
    _, dIJ = time_derivative(col("I") + col("J"), step)
    _, dcross = time_derivative(col("cross"), step)
    _, dK = time_derivative(col("K_func"), step)
    z4, H1, L2, alpha, beta = (col(k)[idx] for k in ("z4", "H1w2", "L2w2", "alpha", "beta"))
    half = idx.size // 2
    tr, va = slice(0, half), slice(half, None)
    kap = kappa / max(1.0, norm_equivalence)
    bound = z4 + H1
    monitors = [
        ("gamma", dgamma, 2.0 * mu * (beta ** 2 - alpha ** 2), epsilon * bound),
        ("I+J", -dIJ, kap * (alpha ** 2 + H1), epsilon * bound),
        ("v1v2", 2.0 * dcross, L2, bound),
    ]
    results = []
    for name, lhs, main, err in monitors:
        C = _fit_subtractive(lhs[tr], main[tr], err[tr])
        scale = float(np.max(np.abs(main)) + np.max(np.abs(err)) * max(C, 1.0)) or 1.0
        train = float(np.max(main[tr] - C * err[tr] - lhs[tr])) / scale
        val = float(np.max(main[va] - slack * C * err[va] - lhs[va])) / scale
        results.append(MonitorResult(name, C, train, val, val <= 0.0))
    full = z4 + H1 + L2
    pos = full[tr] > 0
    c_fit = float(np.min(dK[tr][pos] / full[tr][pos])) if np.any(pos) else 0.0
    scale = float(np.max(np.abs(dK))) or 1.0
    train = float(np.max(c_fit * full[tr] - dK[tr])) / scale
    val = float(np.max(c_fit / slack * full[va] - dK[va])) / scale
    results.append(MonitorResult("K", c_fit, train, val, bool(c_fit > 0 and val <= 0.0)))
    integral = float(simpson_uniform(col("z4") + col("H1w2") + col("L2w2"), step))
    return results, integral


def simpson_uniform(values, step: float) -> float:
    """Composite Simpson on uniform samples (trapezoid on a trailing odd interval)."""
    f = np.asarray(values, dtype=float)
    if f.size < 2:
        return 0.0
    if f.size % 2 == 1:
        return float(simpson(f, step))
    return float(simpson(f[:-1], step) + 0.5 * step * (f[-2] + f[-1]))


def time_integral(series: VirialSeries) -> float:
    """int (|z|^4 + ||v1||^2_{H1_omega} + ||v2||^2_{L2_omega}) dt over the sampled run."""
    n = _window(series, None)
    step = _uniform_step(series["t"][:n])
    return simpson_uniform((series["z4"] + series["H1w2"] + series["L2w2"])[:n], step)
