"""Uniform symmetric grids, sampled functions and the calculus used everywhere else.

All profiles live on a grid y_i = -L + i*h with an odd node count so that y = 0
is a node and the grid is mirror symmetric. Half-line problems use the slice
starting at the centre node.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

PARITY_TOL = 1e-10
PARITIES = ("odd", "even", "none")


class GridError(ValueError):
    """Raised for grid mismatches, bad samples or degenerate inputs."""


@dataclass(frozen=True)
class Grid:
    L: float = 40.0
    h: float = 0.005

    def __post_init__(self):
        if not (self.L > 0 and self.h > 0):
            raise GridError(f"grid needs L > 0 and h > 0, got L={self.L}, h={self.h}")
        m = self.L / self.h
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise GridError(f"L/h = {m} is not an integer; nodes would not hit +-L")
        if round(m) < 4:
            raise GridError("grid needs at least 4 intervals per half line")

    @property
    def m(self) -> int:
        """Index of the node y = 0 (also the number of intervals per half line)."""
        return int(round(self.L / self.h))

    @property
    def N(self) -> int:
        return 2 * self.m + 1

    @property
    def y(self) -> np.ndarray:
        return self.h * np.arange(-self.m, self.m + 1, dtype=float)

    @property
    def y_half(self) -> np.ndarray:
        return self.h * np.arange(0, self.m + 1, dtype=float)

    def half(self, values):
        """Restrict full-grid samples to the nodes y >= 0."""
        return np.asarray(values)[self.m:]

    def extend(self, half_values, parity: str):
        """Extend samples on [0, L] to [-L, L] by odd or even reflection."""
        half_values = np.asarray(half_values)
        if half_values.shape[0] != self.m + 1:
            raise GridError(f"half-line array has {half_values.shape[0]} nodes, expected {self.m + 1}")
        if parity == "odd":
            left = -half_values[:0:-1]
        elif parity == "even":
            left = half_values[:0:-1]
        else:
            raise GridError(f"cannot extend with parity {parity!r}")
        return np.concatenate([left, half_values])

    def summary(self) -> dict:
        return {"L": self.L, "h": self.h, "N": self.N}


def parity_residual(values, parity: str) -> float:
    """Relative mirror defect of samples: max|f(y) -/+ f(-y)| / max|f|."""
    values = np.asarray(values)
    scale = np.max(np.abs(values)) if values.size else 0.0
    if scale == 0.0 or parity == "none":
        return 0.0
    mirror = values[::-1]
    if parity == "odd":
        return float(np.max(np.abs(values + mirror)) / scale)
    return float(np.max(np.abs(values - mirror)) / scale)


def _combine_parity(pa: str, pb: str, product: bool) -> str:
    if pa == "none" or pb == "none":
        return "none"
    if product:
        return "even" if pa == pb else "odd"
    return pa if pa == pb else "none"


@dataclass(frozen=True)
class GridFn:
    """Real samples on a Grid with a parity tag, immutable after construction."""

    grid: Grid
    values: np.ndarray
    parity: str = "none"
    check_parity: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.N,):
            raise GridError(f"GridFn needs {self.grid.N} samples, got shape {vals.shape}")
        if self.parity not in PARITIES:
            raise GridError(f"unknown parity tag {self.parity!r}")
        if self.check_parity and self.parity != "none" and np.all(np.isfinite(vals)):
            res = parity_residual(vals, self.parity)
            if res > PARITY_TOL:
                raise GridError(f"samples tagged {self.parity} have parity residual {res:.3e}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_half(cls, grid: Grid, half_values, parity: str) -> "GridFn":
        return cls(grid, grid.extend(half_values, parity), parity)

    @property
    def half(self) -> np.ndarray:
        return self.grid.half(self.values)

    def _other(self, other):
        if isinstance(other, GridFn):
            if other.grid != self.grid:
                raise GridError("grid mismatch")
            return other.values, other.parity
        return other, "even"

    def __add__(self, other):
        vals, par = self._other(other)
        if isinstance(other, GridFn):
            par = _combine_parity(self.parity, par, product=False)
        elif np.any(np.asarray(other) != 0):
            # a nonzero constant keeps evenness and destroys oddness
            par = "even" if self.parity == "even" else "none"
        else:
            par = self.parity
        return GridFn(self.grid, self.values + vals, par, check_parity=False)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return GridFn(self.grid, -self.values, self.parity, check_parity=False)

    def __mul__(self, other):
        vals, par = self._other(other)
        return GridFn(self.grid, self.values * vals, _combine_parity(self.parity, par, True),
                      check_parity=False)

    __rmul__ = __mul__

    def __truediv__(self, other):
        vals, par = self._other(other)
        return GridFn(self.grid, self.values / vals, _combine_parity(self.parity, par, True),
                      check_parity=False)

    def __pow__(self, k: int):
        par = self.parity if k % 2 == 1 or self.parity == "none" else "even"
        return GridFn(self.grid, self.values ** k, par, check_parity=False)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class ComplexGridFn:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.grid.N,):
            raise GridError(f"ComplexGridFn needs {self.grid.N} samples, got shape {vals.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def real(self) -> GridFn:
        return GridFn(self.grid, self.values.real, "none")

    @property
    def imag(self) -> GridFn:
        return GridFn(self.grid, self.values.imag, "none")


def _check_finite(values):
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise GridError(f"non-finite sample at node {i}: {values[i]!r}")


def simpson(values, h: float, axis: int = -1):
    """Composite Simpson rule for an even number of intervals."""
    values = np.asarray(values)
    n = values.shape[axis]
    if n % 2 == 0 or n < 3:
        raise GridError(f"Simpson needs an odd node count >= 3, got {n}")
    wts = np.ones(n)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    return np.tensordot(values, wts, axes=([axis], [0])) * (h / 3.0)


def simpson_weights(n: int, h: float) -> np.ndarray:
    if n % 2 == 0 or n < 3:
        raise GridError(f"Simpson needs an odd node count >= 3, got {n}")
    wts = np.ones(n)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    return wts * (h / 3.0)


def integrate(f) -> float:
    """Integral of f over [-L, L] by composite Simpson."""
    vals = f.values
    _check_finite(vals)
    if f.parity == "odd":
        return 0.0 if np.all(vals == -vals[::-1]) else float(simpson(vals, f.grid.h))
    return float(simpson(vals, f.grid.h))


_MID6 = np.array([11 / 1440, -31 / 480, 401 / 720, 401 / 720, -31 / 480, 11 / 1440])
_END6 = np.array([95 / 288, 1427 / 1440, -133 / 240, 241 / 720, -173 / 1440, 3 / 160])
_NEXT6 = np.array([-3 / 160, 637 / 1440, 511 / 720, -43 / 240, 77 / 1440, -11 / 1440])


def interval_integrals(values, h: float) -> np.ndarray:
    """Integrals over each cell [x_i, x_{i+1}] from six-point stencils (local error O(h^7)).

    Every cell, including the two at each end, is integrated to the same high order so
    that the accumulated error is smooth; difference checks of cumulative integrals then
    show no kinks near the ends.
    """
    f = np.asarray(values)
    n = f.shape[0]
    if n < 6:
        raise GridError("interval_integrals needs at least 6 nodes")
    out = np.empty((n - 1,) + f.shape[1:], dtype=np.result_type(f, float))
    out[2:-2] = sum(c * f[k:n - 5 + k] for k, c in enumerate(_MID6))
    out[0] = np.tensordot(_END6, f[:6], axes=(0, 0))
    out[1] = np.tensordot(_NEXT6, f[:6], axes=(0, 0))
    rev = f[:-7:-1]
    out[-1] = np.tensordot(_END6, rev, axes=(0, 0))
    out[-2] = np.tensordot(_NEXT6, rev, axes=(0, 0))
    return out * h


def cumulative_from_left(values, h: float) -> np.ndarray:
    """F_i = integral from the first node to node i (fourth order)."""
    cells = interval_integrals(values, h)
    out = np.zeros((cells.shape[0] + 1,) + cells.shape[1:], dtype=cells.dtype)
    np.cumsum(cells, axis=0, out=out[1:])
    return out


def cumulative_from_right(values, h: float) -> np.ndarray:
    """T_i = integral from node i to the last node.

    Accumulated from the far end so that tails of decaying integrands keep their
    relative accuracy (never formed as total minus partial sum).
    """
    cells = interval_integrals(values, h)
    out = np.zeros((cells.shape[0] + 1,) + cells.shape[1:], dtype=cells.dtype)
    np.cumsum(cells[::-1], axis=0, out=out[-2::-1])
    return out


def derivative_values(values, h: float, order: int = 2) -> np.ndarray:
    """Centered first derivative; one-sided stencils of matching order at the ends."""
    f = np.asarray(values)
    if order == 2:
        return np.gradient(f, h, edge_order=2)
    if order != 4:
        raise GridError(f"derivative order must be 2 or 4, got {order}")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    return d


def second_derivative_values(values, h: float) -> np.ndarray:
    """Fourth-order second derivative (five-point interior, six-point one-sided ends)."""
    f = np.asarray(values)
    d = np.empty_like(f)
    d[2:-2] = (-f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]) / (12.0 * h * h)
    d[0] = (45 * f[0] - 154 * f[1] + 214 * f[2] - 156 * f[3] + 61 * f[4] - 10 * f[5]) / (12.0 * h * h)
    d[1] = (10 * f[0] - 15 * f[1] - 4 * f[2] + 14 * f[3] - 6 * f[4] + f[5]) / (12.0 * h * h)
    d[-1] = (45 * f[-1] - 154 * f[-2] + 214 * f[-3] - 156 * f[-4] + 61 * f[-5] - 10 * f[-6]) / (12.0 * h * h)
    d[-2] = (10 * f[-1] - 15 * f[-2] - 4 * f[-3] + 14 * f[-4] - 6 * f[-5] + f[-6]) / (12.0 * h * h)
    return d


_FLIP = {"odd": "even", "even": "odd", "none": "none"}


def differentiate(f: GridFn, order: int = 2) -> GridFn:
    """First derivative of a GridFn; parity flips."""
    return GridFn(f.grid, derivative_values(f.values, f.grid.h, order), _FLIP[f.parity],
                  check_parity=False)


def second_derivative(f: GridFn) -> GridFn:
    return GridFn(f.grid, second_derivative_values(f.values, f.grid.h), f.parity, check_parity=False)


def _same_grid(*fns):
    g = fns[0].grid
    for fn in fns[1:]:
        if fn.grid != g:
            raise GridError(f"grid mismatch: {fn.grid} vs {g}")
    return g


def inner(f: GridFn, g: GridFn) -> float:
    _same_grid(f, g)
    return integrate(f * g)


def inner_p(f: GridFn, g: GridFn, p: GridFn) -> float:
    _same_grid(f, g, p)
    return integrate(p * f * g)


def omega_weight(grid: Grid) -> np.ndarray:
    """Localizing weight sech(y / 2 sqrt 2) of the weighted energy norms."""
    return 1.0 / np.cosh(grid.y / (2.0 * np.sqrt(2.0)))


def weighted_norms(v1: GridFn, v2: GridFn):
    """(||v1||_{H1_w}, ||v2||_{L2_w}) with weight sech(y / 2 sqrt 2)."""
    grid = _same_grid(v1, v2)
    w = omega_weight(grid)
    dv1 = derivative_values(v1.values, grid.h)
    h1 = simpson((dv1 ** 2 + v1.values ** 2) * w, grid.h)
    l2 = simpson(v2.values ** 2 * w, grid.h)
    return float(np.sqrt(h1)), float(np.sqrt(l2))


def project_out_p(f: GridFn, direction: GridFn, p: GridFn) -> GridFn:
    """Remove the p-weighted component of f along direction."""
    nrm = inner_p(direction, direction, p)
    scale = inner_p(f, f, p)
    if not nrm > 1e-300:
        raise GridError(f"degenerate projection direction (norm^2 = {nrm:.3e})")
    coef = inner_p(f, direction, p) / nrm
    out = f.values - coef * direction.values
    # one refinement pass pulls the residual overlap down to round-off
    coef2 = simpson(p.values * out * direction.values, f.grid.h) / nrm
    if abs(coef2) > 1e-14 * np.sqrt(max(scale, 0.0) / nrm):
        out = out - coef2 * direction.values
    return GridFn(f.grid, out, _combine_parity(f.parity, direction.parity, False),
                  check_parity=False)


def write_csv(path, f) -> None:
    """Write `y,value` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "value"])
        for yi, vi in zip(f.grid.y, f.values):
            w.writerow([f"{yi:.17g}", f"{vi:.17g}"])


def read_csv(path, grid: Grid | None = None, parity: str = "none") -> GridFn:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    y, vals = data[:, 0], data[:, 1]
    if grid is None:
        h = float(y[1] - y[0])
        grid = Grid(L=float(-y[0]), h=round(h, 12))
    if grid.N != y.size or np.max(np.abs(grid.y - y)) > 1e-9:
        raise GridError(f"{path}: nodes do not match grid {grid.summary()}")
    return GridFn(grid, vals, parity)
