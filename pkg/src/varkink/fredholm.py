"""Half-line Fredholm equations f = g + int_0^L G(y, w) f(w) dw.

Two solvers: the Neumann (fixed-point) iteration, valid when
nu = sup_y int |G(y, .)| < 1, and a dense collocation solve used as an oracle.
Kernels are either semi-separable (one product per side of the diagonal, which
covers every Green's-function kernel built from a fundamental system) or a
plain callable evaluated lazily.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .grid import (Grid, GridError, GridFn, cumulative_from_left, cumulative_from_right,
                   simpson_weights)

DEFAULT_TOL = 1e-12
MAX_ITER = 10_000
COND_LIMIT = 1e10


class RegimeError(RuntimeError):
    """A numerical precondition of the perturbative regime failed (nu >= 1, no bracket, ...)."""


class HalfLineKernel:
    """Kernel G(y, w) on the half-grid nodes 0 = y_0 < ... < y_m = L."""

    decay_note = ""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.n = grid.m + 1

    def apply(self, f):
        """(int_0^L G(y_i, w) f(w) dw)_i."""
        raise NotImplementedError

    def abs_row_integrals(self):
        raise NotImplementedError

    def dense(self):
        """Matrix A with (A f)_i approximating the integral operator."""
        raise NotImplementedError


class SemiSeparableKernel(HalfLineKernel):
    """G(y, w) = a(y) b(w) for w < y and c(y) d(w) for w > y."""

    def __init__(self, grid: Grid, a, b, c, d, decay_note: str = ""):
        super().__init__(grid)
        self.a, self.b, self.c, self.d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
        for name, v in zip("abcd", (self.a, self.b, self.c, self.d)):
            if v.shape != (self.n,):
                raise GridError(f"kernel factor {name} has shape {v.shape}, expected ({self.n},)")
            if not np.all(np.isfinite(v)):
                raise GridError(f"kernel factor {name} has non-finite samples")
        self.decay_note = decay_note

    def __call__(self, i, j):
        i, j = np.broadcast_arrays(np.asarray(i), np.asarray(j))
        return np.where(j <= i, self.a[i] * self.b[j], self.c[i] * self.d[j])

    def apply(self, f):
        h = self.grid.h
        return (self.a * cumulative_from_left(self.b * f, h)
                + self.c * cumulative_from_right(self.d * f, h))

    def abs_row_integrals(self):
        h = self.grid.h
        return (np.abs(self.a) * cumulative_from_left(np.abs(self.b), h)
                + np.abs(self.c) * cumulative_from_right(np.abs(self.d), h))

    def dense(self):
        h = self.grid.h
        eye = np.eye(self.n)
        left = cumulative_from_left(eye, h)
        out = self.a[:, None] * left * self.b[None, :]
        del left
        right = cumulative_from_right(eye, h)
        out += self.c[:, None] * right * self.d[None, :]
        return out

    def scaled(self, factor: float) -> "SemiSeparableKernel":
        return SemiSeparableKernel(self.grid, factor * self.a, self.b, factor * self.c, self.d,
                                   self.decay_note)


class CallableKernel(HalfLineKernel):
    """Kernel given as a vectorized function G(y, w); rows are evaluated lazily."""

    def __init__(self, grid: Grid, func: Callable, decay_note: str = "", chunk: int = 256):
        super().__init__(grid)
        self.func = func
        self.decay_note = decay_note
        self.chunk = chunk
        self.weights = simpson_weights(self.n, grid.h)

    def _rows(self, start, stop):
        y = self.grid.y_half
        block = np.asarray(self.func(y[start:stop, None], y[None, :]), dtype=float)
        if not np.all(np.isfinite(block)):
            raise GridError(f"kernel has non-finite samples in rows {start}..{stop}")
        return block

    def apply(self, f):
        out = np.empty(self.n)
        wf = self.weights * f
        for s in range(0, self.n, self.chunk):
            e = min(s + self.chunk, self.n)
            out[s:e] = self._rows(s, e) @ wf
        return out

    def abs_row_integrals(self):
        out = np.empty(self.n)
        for s in range(0, self.n, self.chunk):
            e = min(s + self.chunk, self.n)
            out[s:e] = np.abs(self._rows(s, e)) @ self.weights
        return out

    def dense(self):
        return self._rows(0, self.n) * self.weights[None, :]


@dataclass
class FredholmReport:
    solution: np.ndarray  # samples on [0, L]
    nu: float
    iterations: int
    residual: float
    grid: Grid
    method: str = "neumann"
    bound_ok: bool = True
    condition: float = float("nan")

    def extended(self, parity: str) -> GridFn:
        return GridFn.from_half(self.grid, self.solution, parity)

    def to_json(self, path, solution_csv_path: str) -> None:
        with open(path, "w") as fh:
            json.dump({"solution_csv_path": str(solution_csv_path), "nu": self.nu,
                       "iterations": self.iterations, "residual": self.residual}, fh, indent=2)


def estimate_nu(kernel: HalfLineKernel) -> float:
    """sup over nodes of int_0^L |G(y, w)| dw."""
    rows = kernel.abs_row_integrals()
    if not np.all(np.isfinite(rows)):
        raise GridError("kernel row integrals are not finite")
    return float(np.max(rows))


def _as_half(kernel, g):
    if isinstance(g, GridFn):
        g = g.half
    g = np.asarray(g, dtype=float)
    if g.shape != (kernel.n,):
        raise GridError(f"forcing has shape {g.shape}, expected ({kernel.n},)")
    return g


def neumann_solve(kernel: HalfLineKernel, g, tol: float = DEFAULT_TOL,
                  max_iter: int = MAX_ITER, nu: float | None = None) -> FredholmReport:
    """Fixed-point iteration f <- g + G f starting from f = g."""
    g = _as_half(kernel, g)
    if nu is None:
        nu = estimate_nu(kernel)
    if not nu < 1.0:
        raise RegimeError(f"Neumann iteration needs nu < 1, measured nu = {nu:.6g}")
    f = g.copy()
    change = np.inf
    it = 0
    while it < max_iter:
        it += 1
        new = g + kernel.apply(f)
        change = float(np.max(np.abs(new - f)))
        f = new
        if change <= tol:
            break
    else:
        raise RegimeError(f"Neumann iteration hit {max_iter} iterations, last change {change:.3e}")
    residual = float(np.max(np.abs(f - g - kernel.apply(f))))
    gsup = float(np.max(np.abs(g)))
    bound_ok = float(np.max(np.abs(f))) <= gsup / (1.0 - nu) * (1.0 + 1e-12) + 1e-300
    return FredholmReport(f, float(nu), it, residual, kernel.grid, "neumann", bool(bound_ok))


def collocation_solve(kernel: HalfLineKernel, g) -> FredholmReport:
    """Dense solve of (I - G) f = g with a condition-number guard."""
    g = _as_half(kernel, g)
    A = np.eye(kernel.n) - kernel.dense()
    anorm = np.linalg.norm(A, 1)
    lu, piv = sla.lu_factor(A)
    rcond, info = sla.lapack.dgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if not cond < COND_LIMIT:
        raise RegimeError(f"collocation matrix ill-conditioned (condition estimate {cond:.3e})")
    f = sla.lu_solve((lu, piv), g)
    residual = float(np.max(np.abs(f - g - kernel.apply(f))))
    try:
        nu = estimate_nu(kernel)
    except GridError:
        nu = float("nan")
    bound_ok = (not nu < 1.0) or float(np.max(np.abs(f))) <= np.max(np.abs(g)) / (1.0 - nu) * (1 + 1e-9)
    return FredholmReport(f, float(nu), 1, residual, kernel.grid, "collocation", bool(bound_ok), float(cond))
