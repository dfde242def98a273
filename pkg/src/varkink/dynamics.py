"""Time evolution of odd perturbations of the kink.

    d/dt phi1 = phi2,    d/dt phi2 = -L_K phi1 - (3 K phi1^2 + phi1^3)

Kick-drift-kick leapfrog in time, fourth-order differences in space with zero
values beyond +-L (Dirichlet), and an optional sponge that damps phi2 in an outer
band to emulate radiation escaping to infinity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import Grid, GridError, GridFn, parity_residual, simpson
from .kink import Linearization

BOUNDARIES = ("dirichlet", "sponge")
INIT_KINDS = ("internal-mode", "radiation", "mixed")
LOCAL_WINDOW = 10.0


class BlowUpError(RuntimeError):
    pass


@dataclass(frozen=True)
class FieldState:
    t: float
    phi1: GridFn
    phi2: GridFn

    @classmethod
    def from_arrays(cls, grid: Grid, t: float, phi1, phi2) -> "FieldState":
        return cls(float(t), GridFn(grid, phi1, "odd", check_parity=False),
                   GridFn(grid, phi2, "odd", check_parity=False))

    @property
    def grid(self) -> Grid:
        return self.phi1.grid


@dataclass(frozen=True)
class SimConfig:
    dt: float
    T_final: float = 400.0
    boundary: str = "sponge"
    sponge_width: float = 10.0
    sample_every: int = 25
    sponge_strength: float = 0.5
    nonlinear: bool = True

    def validate(self, grid: Grid) -> None:
        if self.boundary not in BOUNDARIES:
            raise GridError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if not 0 < self.dt <= 0.9 * grid.h:
            raise GridError(f"dt = {self.dt} violates 0 < dt <= 0.9 h = {0.9 * grid.h}")
        if self.sample_every < 1:
            raise GridError("sample_every must be >= 1")
        if self.boundary == "sponge" and not 0 < self.sponge_width < grid.L:
            raise GridError(f"sponge_width must lie in (0, L), got {self.sponge_width}")


def default_config(grid: Grid, **kw) -> SimConfig:
    kw.setdefault("dt", 0.4 * grid.h)
    return SimConfig(**kw)


def sponge_rate(grid: Grid, width: float, strength: float) -> np.ndarray:
    """Damping rate: zero inside, rising as sin^2 across the outer band of given width."""
    s = np.clip((np.abs(grid.y) - (grid.L - width)) / width, 0.0, 1.0)
    return strength * np.sin(0.5 * np.pi * s) ** 2


class Evolver:
    """Preallocated half-line operator for repeated steps on one linearization.

    States are odd, so only the nodes 0 <= y <= L are evolved, with u(0) = 0 and odd
    ghost values across y = 0. Working in the odd sector exactly matters: for delta > 0
    the even eigenvalue lambda0 is negative and would amplify round-off asymmetry.
    """

    def __init__(self, lin: Linearization, cfg: SimConfig):
        cfg.validate(lin.grid)
        self.lin, self.cfg = lin, cfg
        grid = lin.grid
        self.grid = grid
        self.h = grid.h
        self.beta = np.ascontiguousarray(lin.beta.half)
        self.V = grid.half(lin.potential)
        self.K = lin.kink.K.half
        self.w = grid.half(lin.weight.values)
        self.pad = np.zeros(grid.m + 5)
        if cfg.boundary == "sponge":
            rate = sponge_rate(grid, cfg.sponge_width, cfg.sponge_strength)
            self.mask = np.exp(-grid.half(rate) * cfg.dt)
        else:
            self.mask = None

    def operator(self, u):
        """L_K u on [0, L] for odd u, zero beyond L."""
        p = self.pad
        p[2:-2] = u
        p[0], p[1] = -u[2], -u[1]
        h = self.h
        d2 = (-p[:-4] + 16.0 * p[1:-3] - 30.0 * u + 16.0 * p[3:-1] - p[4:]) / (12.0 * h * h)
        d1 = (p[:-4] - 8.0 * p[1:-3] + 8.0 * p[3:-1] - p[4:]) / (12.0 * h)
        return -d2 - self.beta * d1 + self.V * u

    def force(self, phi1):
        acc = -self.operator(phi1)
        if self.cfg.nonlinear:
            acc -= (3.0 * self.K + phi1) * phi1 * phi1
        acc[0] = acc[-1] = 0.0
        return acc

    def step_arrays(self, phi1, phi2, acc=None):
        """One kick-drift-kick step of half-line arrays."""
        dt = self.cfg.dt
        if acc is None:
            acc = self.force(phi1)
        phi2 = phi2 + 0.5 * dt * acc
        phi1 = phi1 + dt * phi2
        phi1[0] = phi1[-1] = 0.0
        acc = self.force(phi1)
        phi2 = phi2 + 0.5 * dt * acc
        if self.mask is not None:
            phi2 *= self.mask
        return phi1, phi2, acc

    def energy(self, phi1, phi2) -> float:
        """Energy of half-line arrays; the integrand is even, so twice the half integral."""
        Lphi = self.operator(phi1)
        integrand = self.w * (phi2 ** 2 + phi1 * Lphi + 2.0 * self.K * phi1 ** 3 + 0.5 * phi1 ** 4)
        return 2.0 * float(simpson(integrand, self.h))

    def energy_full(self, phi1, phi2) -> float:
        """Energy of full-grid odd arrays."""
        return self.energy(self.grid.half(phi1), self.grid.half(phi2))

    def full(self, half_values):
        return self.grid.extend(half_values, "odd")


def step(state: FieldState, lin: Linearization, cfg: SimConfig) -> FieldState:
    """One kick-drift-kick step."""
    ev = Evolver(lin, cfg)
    p1, p2 = np.array(state.phi1.half), np.array(state.phi2.half)
    p1, p2, _ = ev.step_arrays(p1, p2)
    if not (np.all(np.isfinite(p1)) and np.all(np.isfinite(p2))):
        raise BlowUpError(f"non-finite state at t = {state.t + cfg.dt:.6g}")
    return FieldState.from_arrays(state.grid, state.t + cfg.dt, ev.full(p1), ev.full(p2))


def energy(state: FieldState, lin: Linearization) -> float:
    """int w phi2^2 + <L_K phi1, phi1>_w + 2 int w K phi1^3 + (1/2) int w phi1^4."""
    cfg = SimConfig(dt=0.4 * lin.grid.h, boundary="dirichlet")
    return Evolver(lin, cfg).energy(state.phi1.half, state.phi2.half)


def energy_norm(phi1, phi2, h: float, mask=None) -> float:
    """sqrt(||phi1||_{H1}^2 + ||phi2||_{L2}^2), optionally restricted by a 0/1 mask."""
    d1 = np.gradient(phi1, h, edge_order=2)
    integrand = d1 ** 2 + phi1 ** 2 + phi2 ** 2
    if mask is not None:
        integrand = integrand * mask
    return float(np.sqrt(simpson(integrand, h)))


def local_mask(grid: Grid, half_width: float = LOCAL_WINDOW) -> np.ndarray:
    return (np.abs(grid.y) <= half_width + 1e-12).astype(float)


@dataclass
class Trajectory:
    times: np.ndarray
    norms: np.ndarray
    local_norms: np.ndarray
    energies: np.ndarray
    final: FieldState
    initial: FieldState
    cfg: SimConfig
    records: list = field(default_factory=list)
    states: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def sup_norm(self) -> float:
        return float(np.max(self.norms))

    @property
    def initial_norm(self) -> float:
        return float(self.norms[0])


def run(init: FieldState, lin: Linearization, cfg: SimConfig,
        callbacks: Sequence[Callable] = (), store_every: int = 0,
        blowup_factor: float = 1e3) -> Trajectory:
    """Advance to T_final; every sample_every steps record norms and call callbacks(state)."""
    import time

    t0 = time.perf_counter()
    ev = Evolver(lin, cfg)
    grid = lin.grid
    h = grid.h
    nsteps = int(round(cfg.T_final / cfg.dt))
    lmask = local_mask(grid)
    p1 = np.array(init.phi1.half, dtype=float)
    p2 = np.array(init.phi2.half, dtype=float)
    times, norms, local_norms, energies, records, states = [], [], [], [], [], []
    norm0 = max(energy_norm(init.phi1.values, init.phi2.values, h), 1e-300)

    def sample(k, p1, p2):
        t = init.t + k * cfg.dt
        f1, f2 = ev.full(p1), ev.full(p2)
        state = FieldState.from_arrays(grid, t, f1, f2)
        times.append(t)
        n = energy_norm(f1, f2, h)
        norms.append(n)
        local_norms.append(energy_norm(f1, f2, h, lmask))
        energies.append(ev.energy(p1, p2))
        if n > blowup_factor * norm0 or not np.isfinite(n):
            raise BlowUpError(f"norm {n:.3e} left the stability regime at t = {t:.4g}")
        for cb in callbacks:
            rec = cb(state)
            if rec is not None:
                records.append(rec)
        if store_every and (len(times) - 1) % store_every == 0:
            states.append(state)

    sample(0, p1, p2)
    acc = None
    for k in range(1, nsteps + 1):
        p1, p2, acc = ev.step_arrays(p1, p2, acc)
        if k % cfg.sample_every == 0 or k == nsteps:
            if not (np.all(np.isfinite(p1)) and np.all(np.isfinite(p2))):
                raise BlowUpError(f"non-finite state at t = {init.t + k * cfg.dt:.6g}")
            sample(k, p1, p2)
    final = FieldState.from_arrays(grid, init.t + nsteps * cfg.dt, ev.full(p1), ev.full(p2))
    return Trajectory(np.array(times), np.array(norms), np.array(local_norms), np.array(energies),
                      final, init, cfg, records, states, time.perf_counter() - t0)


def radiation_bump(grid: Grid, center: float = 20.0) -> np.ndarray:
    y = grid.y
    return np.exp(-(y - center) ** 2) - np.exp(-(y + center) ** 2)


def make_initial(kind: str, epsilon: float, spec, center: float = 20.0) -> FieldState:
    """Odd initial data of size epsilon.

    internal-mode: (epsilon Ybar1, 0), so z1(0) = epsilon exactly.
    radiation: epsilon-normalized (in H1 x L2) odd pair of Gaussian bumps at +-center.
    mixed: sum of the two shapes, normalized to epsilon.
    """
    if kind not in INIT_KINDS:
        raise GridError(f"unknown initial-data kind {kind!r}; choose from {INIT_KINDS}")
    if not 0 < epsilon <= 0.05:
        raise GridError(f"epsilon = {epsilon} outside (0, 0.05]")
    grid = spec.grid
    h = grid.h
    zeros = np.zeros(grid.N)
    Y1 = spec.Ybar1.values
    if kind == "internal-mode":
        phi1 = epsilon * Y1
    else:
        bump = radiation_bump(grid, center)
        shape = bump if kind == "radiation" else bump / energy_norm(bump, zeros, h) + Y1 / energy_norm(Y1, zeros, h)
        phi1 = epsilon * shape / energy_norm(shape, zeros, h)
    phi1 = 0.5 * (phi1 - phi1[::-1])
    return FieldState.from_arrays(grid, 0.0, phi1, zeros.copy())


def parity_drift(state: FieldState) -> float:
    return max(parity_residual(state.phi1.values, "odd"), parity_residual(state.phi2.values, "odd"))
