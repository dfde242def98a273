"""High-level pipelines shared by the command line and the acceptance tests."""

from __future__ import annotations

import csv
import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, validate
from .diagnostics import (DiagnosticsContext, VirialRecorder, measure_coercivity, time_integral)
from .dynamics import Evolver, SimConfig, make_initial, run
from .grid import Grid
from .kink import build_kink, linearize
from .profiles import SpeedProfile, builtin_drift, speed_to_drift
from .spectral import compute_spectrum, golden_rule_constants, unperturbed_source

REFERENCE_A = 0.687271
REFERENCE_DENOMINATOR = -0.327
A_TOL = 5e-4
DENOMINATOR_TOL = 5e-3


@dataclass
class Pipeline:
    cfg: RunConfig
    grid: Grid
    drift: object
    kink: object = None
    lin: object = None
    spec: object = None
    timings: dict = field(default_factory=dict)


def make_drift(cfg: RunConfig, grid: Grid):
    if cfg.speed_profile:
        return speed_to_drift(SpeedProfile.from_csv(cfg.speed_profile), grid)
    return builtin_drift(cfg.family, cfg.delta, grid)


def build(cfg: RunConfig, upto: str = "spectrum", oracle: bool = True) -> Pipeline:
    """Run the stationary pipeline up to 'kink' or 'spectrum', timing each stage."""
    grid = Grid(cfg.L, cfg.h)
    pipe = Pipeline(cfg, grid, make_drift(cfg, grid))
    t0 = time.perf_counter()
    pipe.kink = build_kink(pipe.drift, tol=cfg.tol)
    pipe.lin = linearize(pipe.kink, cfg.convention)
    pipe.timings["kink"] = time.perf_counter() - t0
    if upto == "spectrum":
        t0 = time.perf_counter()
        pipe.spec = compute_spectrum(pipe.lin, oracle=oracle)
        pipe.timings["spectrum"] = time.perf_counter() - t0
    return pipe


def sim_config(cfg: RunConfig) -> SimConfig:
    return SimConfig(dt=cfg.time_step, T_final=cfg.T_final, boundary=cfg.boundary,
                     sponge_width=cfg.sponge_width, sample_every=cfg.sample_every,
                     nonlinear=cfg.nonlinear)


def simulate(pipe: Pipeline, kappa: float = 0.0, store_every: int = 0):
    """Evolve the configured initial data with the virial recorder attached."""
    cfg = pipe.cfg
    scfg = sim_config(cfg)
    ctx = DiagnosticsContext(pipe.spec, kappa=kappa, nonlinear=cfg.nonlinear)
    recorder = VirialRecorder(ctx, Evolver(pipe.lin, scfg).energy_full)
    init = make_initial(cfg.init, cfg.epsilon, pipe.spec)
    t0 = time.perf_counter()
    traj = run(init, pipe.lin, scfg, [recorder], store_every=store_every)
    pipe.timings["simulate"] = time.perf_counter() - t0
    return traj, recorder.series


def reproduce_constants(L: float = 40.0, h: float = 0.005) -> dict:
    """Constant-speed golden-rule constant a and denominator <psi' f, Im k>."""
    t0 = time.perf_counter()
    grid = Grid(L, h)
    f0 = unperturbed_source(grid)
    a, _, den = golden_rule_constants(f0, _unit_weight(grid))
    elapsed = time.perf_counter() - t0
    da, dd = abs(a - REFERENCE_A), abs(den - REFERENCE_DENOMINATOR)
    return {"a": a, "a_reference": REFERENCE_A, "a_abs_diff": da, "a_ok": bool(da <= A_TOL),
            "denominator": den, "denominator_reference": REFERENCE_DENOMINATOR,
            "denominator_abs_diff": dd, "denominator_ok": bool(dd <= DENOMINATOR_TOL),
            "grid": {"L": L, "h": h}, "seconds": elapsed}


def _unit_weight(grid: Grid):
    from .grid import GridFn
    return GridFn(grid, np.ones(grid.N), "even")


SWEEP_COLUMNS = ("value", "lambda0", "lambda1", "a0", "kappa_B", "kappa_D", "time_integral",
                 "sup_norm_ratio", "status")
NUMERIC_AXES = ("delta", "epsilon", "L", "h", "T_final", "dt", "sponge_width")


def sweep_job(cfg: RunConfig) -> dict:
    """One sweep row: spectrum, coercivity and a simulation for one configuration."""
    row = {"status": "ok"}
    try:
        pipe = build(cfg, oracle=False)
        spec = pipe.spec
        row.update(lambda0=spec.lambda0, lambda1=spec.lambda1, a0=spec.a0_const)
        cr = measure_coercivity(spec, stride=cfg.coercivity_stride)
        row.update(kappa_B=cr.kappa_B, kappa_D=cr.kappa_D)
        traj, series = simulate(pipe, kappa=cr.kappa_D)
        row.update(time_integral=time_integral(series),
                   sup_norm_ratio=traj.sup_norm / traj.initial_norm)
    except Exception as exc:  # recorded per row, the sweep continues
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row


def sweep(template: RunConfig, axis: str, values, workers: int = 1, out_path=None):
    """Run one job per axis value concurrently and write summary.csv."""
    if axis not in NUMERIC_AXES:
        raise ConfigError(f"sweep axis must be one of {NUMERIC_AXES}, got {axis!r}")
    configs = [validate(dataclasses.replace(template, **{axis: float(v)})) for v in values]
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_job, configs))
    else:
        rows = [sweep_job(c) for c in configs]
    for v, row in zip(values, rows):
        row["value"] = float(v)
    if out_path is not None:
        write_summary(out_path, axis, rows)
    return rows


def write_summary(path, axis: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([axis] + list(SWEEP_COLUMNS[1:]))
        for row in rows:
            out = []
            for c in SWEEP_COLUMNS:
                v = row.get(c, "")
                out.append(f"{v:.17g}" if isinstance(v, float) else v)
            wr.writerow(out)


def manifest_dict(cfg: RunConfig | None, out_dir, timings: dict, provenance: dict, extra=None) -> dict:
    import hashlib

    out_dir = Path(out_dir)
    sums = {}
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            sums[str(p.relative_to(out_dir))] = hashlib.sha256(p.read_bytes()).hexdigest()
    doc = {"config": cfg.echo() if cfg is not None else {}, "checksums": sums,
           "wall_times": timings, "provenance": provenance}
    if extra:
        doc.update(extra)
    return doc
