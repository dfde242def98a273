"""Report figures (matplotlib, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_kink(kink, path) -> None:
    grid = kink.grid
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    axes[0].plot(grid.y, kink.K.values, label="K")
    axes[0].plot(grid.y, kink.drift.b.values, label="b")
    axes[0].set_xlabel("y")
    axes[0].legend()
    axes[1].semilogy(grid.y, np.abs(kink.H_delta.values) + 1e-300)
    axes[1].set_xlabel("y")
    axes[1].set_title("|H_delta|")
    _save(fig, path)


def plot_spectrum(spec, path) -> None:
    grid = spec.grid
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for name in ("Ybar0", "Ybar1", "fbar", "q"):
        axes[0].plot(grid.y, getattr(spec, name).values, label=name)
    axes[0].set_xlim(-15, 15)
    axes[0].legend()
    axes[1].plot(grid.y, spec.hbar.values, label="hbar")
    axes[1].plot(grid.y, spec.gbar.values, "--", label="gbar")
    axes[1].legend()
    axes[1].set_xlabel("y")
    _save(fig, path)


def plot_timeseries(series, path) -> None:
    t = series["t"]
    fig, axes = plt.subplots(2, 2, figsize=(10, 6))
    axes[0, 0].plot(t, np.sqrt(series["zsq"]))
    axes[0, 0].set_title("|z|")
    axes[0, 1].plot(t, series["local_norm"])
    axes[0, 1].set_title("local norm on [-10, 10]")
    axes[1, 0].plot(t, series["H_func"])
    axes[1, 0].set_title("H functional")
    E = series["E"]
    axes[1, 1].plot(t, (E - E[0]) / max(abs(E[0]), 1e-300))
    axes[1, 1].set_title("relative energy change")
    for ax in axes.flat:
        ax.set_xlabel("t")
    _save(fig, path)


def plot_virial(t, lhs, rhs, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, lhs, label="d/dt (I + J)")
    ax.plot(t, rhs, "--", label="-Dtilde + R")
    ax.set_xlabel("t")
    ax.legend()
    _save(fig, path)


def plot_sweep(axis, rows, path) -> None:
    ok = [r for r in rows if r.get("status") == "ok"]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    if ok:
        x = [r["value"] for r in ok]
        for key in ("lambda0", "kappa_B", "kappa_D"):
            ax.plot(x, [r[key] for r in ok], "o-", label=key)
        ax.legend()
    ax.set_xlabel(axis)
    _save(fig, path)
