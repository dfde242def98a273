"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical-regime rejection,
4 acceptance-tolerance failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import FIELD_TYPES, ConfigError, RunConfig, defaults_table, parse_config
from .dynamics import BlowUpError
from .fredholm import RegimeError
from .grid import Grid, GridError, GridFn, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_REGIME, EXIT_TOLERANCE = 0, 2, 3, 4

PROVENANCE = {
    "K": "kink.build_kink", "H_delta": "kink.build_kink", "V_b": "kink.solve_Vb",
    "lambda0": "spectral.find_lambda0", "lambda1": "spectral.find_lambda1",
    "Ybar0": "spectral.find_lambda0", "Ybar1": "spectral.find_lambda1",
    "fbar": "spectral.source_profile", "q": "spectral.build_fbar_q",
    "a": "spectral.golden_rule_constants", "a0": "spectral.golden_rule_constants",
    "psi_f_imk": "spectral.golden_rule_constants", "hbar": "spectral.build_hbar_gbar",
    "gbar": "spectral.build_hbar_gbar", "oracle_gap": "spectral.matrix_oracle",
    "kappa_B": "diagnostics.measure_coercivity", "kappa_D": "diagnostics.measure_coercivity",
    "timeseries": "dynamics.run + diagnostics.VirialRecorder",
    "virial_defect": "diagnostics.check_virial_identity",
    "monitors": "diagnostics.monitor_inequalities", "time_integral": "diagnostics.time_integral",
    "special_functions": "profiles.special_values", "kcirc": "profiles.kcirc_values",
}

DECAY_LOCAL, DECAY_H, DECAY_Z = 0.5, 0.25, 0.5
VIRIAL_TOL, ZSQ_TOL, ORBITAL_FACTOR = 1e-3, 1e-3, 5.0


def _out_dir(cfg: RunConfig) -> Path:
    p = Path(cfg.output)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _manifest(cfg, out, timings, keys, extra=None) -> None:
    from .workflow import manifest_dict

    prov = {k: PROVENANCE[k] for k in keys}
    _write_json(out / "manifest.json", manifest_dict(cfg, out, timings, prov, extra))


# ---------------------------------------------------------------- commands

def cmd_kink_build(cfg: RunConfig, args) -> int:
    from .figures import plot_kink
    from .kink import solve_Vb
    from .workflow import build

    out = _out_dir(cfg)
    pipe = build(cfg, upto="kink")
    kink = pipe.kink
    t0 = time.perf_counter()
    pair = solve_Vb(pipe.drift, cfg.tol)
    pipe.timings["fundamental"] = time.perf_counter() - t0
    for name, fn in (("K", kink.K), ("H_delta", kink.H_delta), ("b", pipe.drift.b), ("p", pipe.drift.p)):
        write_csv(out / f"{name}.csv", fn)
    Vb = GridFn.from_half(pipe.grid, pair.Yb.half - _y0_half(pipe.grid), "even")
    write_csv(out / "Vb.csv", Vb)
    pair.report.to_json(out / "fredholm.json", "Vb.csv")
    _write_json(out / "kink.json", {**kink.report(), "wronskian_defect": pair.wronskian_defect,
                                    "grid": pipe.grid.summary()})
    plot_kink(kink, out / "kink.png")
    _manifest(cfg, out, pipe.timings, ("K", "H_delta", "V_b"))
    print(json.dumps(kink.report(), indent=2, default=_json_default))
    return EXIT_OK


def _y0_half(grid: Grid):
    from .profiles import special_values
    return special_values("Y0", grid.y_half)


def cmd_spectrum(cfg: RunConfig, args) -> int:
    from .figures import plot_spectrum
    from .workflow import build

    out = _out_dir(cfg)
    pipe = build(cfg, upto="spectrum", oracle=True)
    spec = pipe.spec
    _write_json(out / "spectral.json", spec.summary())
    for name in ("Ybar0", "Ybar1", "fbar", "q", "hbar", "gbar"):
        write_csv(out / f"{name}.csv", getattr(spec, name))
    _write_json(out / "spectral_diagnostics.json", {**spec.diagnostics, "oracle": spec.oracle})
    plot_spectrum(spec, out / "spectrum.png")
    _manifest(cfg, out, pipe.timings, ("lambda0", "lambda1", "Ybar0", "Ybar1", "fbar", "q", "a", "a0",
                                       "psi_f_imk", "hbar", "gbar", "oracle_gap"))
    print(json.dumps(spec.summary(), indent=2))
    return EXIT_OK


def cmd_constants(cfg: RunConfig, args) -> int:
    from .workflow import reproduce_constants

    out = _out_dir(cfg)
    rep = reproduce_constants(cfg.L, cfg.h)
    _write_json(out / "constants.json", rep)
    print(f"a = {rep['a']:.7f}  (reference {rep['a_reference']}, |diff| = {rep['a_abs_diff']:.2e})")
    print(f"<psi' f, Im k> = {rep['denominator']:.7f}  (reference {rep['denominator_reference']}, "
          f"|diff| = {rep['denominator_abs_diff']:.2e})")
    _manifest(cfg, out, {"constants": rep["seconds"]}, ("a", "psi_f_imk"))
    return EXIT_OK if rep["a_ok"] and rep["denominator_ok"] else EXIT_TOLERANCE


def cmd_simulate(cfg: RunConfig, args) -> int:
    from .diagnostics import measure_coercivity
    from .figures import plot_timeseries
    from .workflow import build, simulate

    out = _out_dir(cfg)
    pipe = build(cfg, upto="spectrum", oracle=False)
    t0 = time.perf_counter()
    cr = measure_coercivity(pipe.spec, stride=cfg.coercivity_stride)
    pipe.timings["coercivity"] = time.perf_counter() - t0
    traj, series = simulate(pipe, kappa=cr.kappa_D, store_every=cfg.snapshot_every)
    series.to_csv(out / "timeseries.csv")
    series.to_csv(out / "virial_terms.csv", columns=tuple(series.columns))
    save_trajectory(out / "trajectory.npz", pipe.grid, series, traj.states)
    E = series["E"]
    summary = {"sup_norm": traj.sup_norm, "initial_norm": traj.initial_norm,
               "sup_norm_ratio": traj.sup_norm / traj.initial_norm,
               "energy_drift": float(np.max(np.abs(E - E[0])) / max(abs(E[0]), 1e-300)),
               "kappa_B": cr.kappa_B, "kappa_D": cr.kappa_D, "samples": len(series),
               "snapshots": len(traj.states)}
    _write_json(out / "simulation.json", summary)
    plot_timeseries(series, out / "timeseries.png")
    _manifest(cfg, out, pipe.timings, ("timeseries", "kappa_B", "kappa_D"))
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def save_trajectory(path, grid: Grid, series, states) -> None:
    arrays = {f"series_{k}": np.asarray(v, dtype=float) for k, v in series.columns.items()}
    arrays["grid"] = np.array([grid.L, grid.h])
    arrays["snapshot_t"] = np.array([s.t for s in states])
    arrays["snapshot_phi1"] = np.array([s.phi1.half for s in states])
    arrays["snapshot_phi2"] = np.array([s.phi2.half for s in states])
    np.savez_compressed(path, **arrays)


def load_trajectory(path):
    from .diagnostics import VirialSeries
    from .dynamics import FieldState

    data = np.load(path)
    L, h = data["grid"]
    grid = Grid(float(L), float(h))
    series = VirialSeries({k[len("series_"):]: list(data[k]) for k in data.files if k.startswith("series_")})
    states = [FieldState.from_arrays(grid, t, grid.extend(p1, "odd"), grid.extend(p2, "odd"))
              for t, p1, p2 in zip(data["snapshot_t"], data["snapshot_phi1"], data["snapshot_phi2"])]
    return grid, series, states


def diagnose_run(cfg: RunConfig, series, states, spec, kappa_D: float, norm_equivalence: float) -> dict:
    """All trajectory checks of a simulate output directory."""
    from .diagnostics import (DiagnosticsContext, check_virial_identity, check_zsq_rate, decompose,
                              monitor_inequalities, time_integral)

    series.validate()
    ctx = DiagnosticsContext(spec, kappa=kappa_D, nonlinear=cfg.nonlinear)
    orth = max((decompose(s, ctx).orth_residual for s in states), default=0.0)
    checks = {}
    window = cfg.L - cfg.sponge_width
    spacing = float(series["t"][1] - series["t"][0]) if len(series) > 1 else float("inf")
    doc = {"snapshot_orthogonality": orth, "time_integral": time_integral(series),
           "sample_spacing": spacing}
    if spacing <= 0.05 + 1e-12 and cfg.nonlinear:
        defect, _ = check_virial_identity(series, t_max=window)
        doc["virial_defect"] = defect
        checks["virial_identity"] = defect <= VIRIAL_TOL
        doc["zsq_rate_defect"] = check_zsq_rate(series, t_max=window)
        checks["zsq_rate"] = doc["zsq_rate_defect"] <= ZSQ_TOL
        results, _ = monitor_inequalities(series, spec.mu, cfg.epsilon, kappa_D, norm_equivalence,
                                          t_max=window)
        doc["monitors"] = [dataclasses.asdict(r) for r in results]
        checks["monitors"] = all(r.ok for r in results)
    local = series["local_norm"]
    H = series["H_func"]
    z = np.sqrt(series["zsq"])
    doc["decay"] = {"local_final_over_max": float(local[-1] / local.max()),
                    "H_final_over_max": float(H[-1] / max(H.max(), 1e-300)),
                    "z_final_over_initial": float(z[-1] / max(z[0], 1e-300))}
    if cfg.init == "internal-mode":
        d = doc["decay"]
        checks["decay_local"] = d["local_final_over_max"] <= DECAY_LOCAL
        checks["decay_H"] = d["H_final_over_max"] <= DECAY_H
        checks["decay_z"] = d["z_final_over_initial"] <= DECAY_Z
    doc["checks"] = checks
    return doc


def cmd_diagnose(cfg: RunConfig, args) -> int:
    from .diagnostics import measure_coercivity
    from .figures import plot_virial
    from .diagnostics import check_virial_identity
    from .workflow import build

    run_dir = Path(args.trajectory)
    man_path = run_dir / "manifest.json"
    if not man_path.is_file() or not (run_dir / "trajectory.npz").is_file():
        raise ConfigError(f"{run_dir} is not a simulate output directory")
    echoed = json.loads(man_path.read_text())["config"]
    run_cfg = parse_config(None, {**echoed, "output": cfg.output})
    out = _out_dir(run_cfg)
    t0 = time.perf_counter()
    grid, series, states = load_trajectory(run_dir / "trajectory.npz")
    pipe = build(run_cfg, upto="spectrum", oracle=False)
    cr = measure_coercivity(pipe.spec, stride=run_cfg.coercivity_stride)
    doc = diagnose_run(run_cfg, series, states, pipe.spec, cr.kappa_D, cr.norm_equivalence)
    doc["kappa_D"] = cr.kappa_D
    _write_json(out / "diagnostics.json", doc)
    if "virial_defect" in doc:
        _, info = check_virial_identity(series, t_max=run_cfg.L - run_cfg.sponge_width)
        plot_virial(info["t"], info["lhs"], info["rhs"], out / "virial.png")
    pipe.timings["diagnose"] = time.perf_counter() - t0
    _manifest(run_cfg, out, pipe.timings, ("virial_defect", "monitors", "time_integral", "kappa_D"))
    print(json.dumps({"checks": doc["checks"], "decay": doc["decay"],
                      "virial_defect": doc.get("virial_defect")}, indent=2, default=_json_default))
    return EXIT_OK if all(doc["checks"].values()) else EXIT_TOLERANCE


def cmd_coercivity(cfg: RunConfig, args) -> int:
    from .diagnostics import measure_coercivity
    from .workflow import build

    out = _out_dir(cfg)
    pipe = build(cfg, upto="spectrum", oracle=False)
    t0 = time.perf_counter()
    rep = measure_coercivity(pipe.spec, stride=cfg.coercivity_stride,
                             n_samples=cfg.coercivity_samples, seed=cfg.seed)
    pipe.timings["coercivity"] = time.perf_counter() - t0
    _write_json(out / "coercivity.json", rep.to_json_dict())
    _manifest(cfg, out, pipe.timings, ("kappa_B", "kappa_D"),
              {"details": {"kappa_B_unconstrained": rep.kappa_B_unconstrained,
                           "norm_equivalence": rep.norm_equivalence,
                           "sampled_min_B": rep.sampled_min_B}})
    print(json.dumps(rep.to_json_dict(), indent=2))
    ok = rep.kappa_B > 0 and rep.kappa_D > 0
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_sweep(cfg: RunConfig, args) -> int:
    from .figures import plot_sweep
    from .workflow import sweep

    out = _out_dir(cfg)
    values = [float(v) for v in args.values.split(",") if v.strip()] if args.values else []
    t0 = time.perf_counter()
    rows = sweep(cfg, args.axis, values, workers=cfg.workers, out_path=out / "summary.csv")
    plot_sweep(args.axis, rows, out / "sweep.png")
    _manifest(cfg, out, {"sweep": time.perf_counter() - t0},
              ("lambda0", "lambda1", "a0", "kappa_B", "kappa_D", "time_integral"),
              {"axis": args.axis, "values": values})
    for row in rows:
        print(row)
    return EXIT_OK


def cmd_profiles_dump(cfg: RunConfig, args) -> int:
    from .profiles import SPECIAL, kcirc_values, special_values
    from .workflow import make_drift

    out = _out_dir(cfg)
    t0 = time.perf_counter()
    grid = Grid(cfg.L, cfg.h)
    for name, (_, parity) in SPECIAL.items():
        write_csv(out / f"{name}.csv", GridFn(grid, special_values(name, grid.y), parity))
    k = special_values("k", grid.y)
    write_csv(out / "k_re.csv", GridFn(grid, k.real, "even"))
    write_csv(out / "k_im.csv", GridFn(grid, k.imag, "odd"))
    kc = kcirc_values(np.sqrt(1.5), grid.y)
    write_csv(out / "kcirc_re.csv", GridFn(grid, kc.real, "none", check_parity=False))
    write_csv(out / "kcirc_im.csv", GridFn(grid, kc.imag, "none", check_parity=False))
    drift = make_drift(cfg, grid)
    write_csv(out / "b.csv", drift.b)
    write_csv(out / "p.csv", drift.p)
    _manifest(cfg, out, {"profiles": time.perf_counter() - t0}, ("special_functions", "kcirc"))
    print(f"wrote {len(SPECIAL) + 6} profiles to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat `key = value` file (flags override it)")
    g = p.add_argument_group("configuration keys")
    for name in FIELD_TYPES:
        opts = [f"--{name}"]
        if "_" in name:
            opts.append(f"--{name.replace('_', '-')}")
        if name == "output":
            opts.append("--out")
        g.add_argument(*opts, dest=name, default=None, metavar=FIELD_TYPES[name].__name__.upper())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varkink", description="Kinks of variable-speed phi^4 models.")
    parser.add_argument("--show-defaults", action="store_true", help="print the defaults table and exit")
    sub = parser.add_subparsers(dest="command")

    kink = sub.add_parser("kink", help="stationary kink")
    ksub = kink.add_subparsers(dest="action", required=True)
    kb = ksub.add_parser("build", help="build the kink and write its profiles")
    _add_config_flags(kb)
    kb.set_defaults(func=cmd_kink_build)

    for name, func, text in (("spectrum", cmd_spectrum, "eigenvalues, profiles and constants"),
                             ("constants", cmd_constants, "constant-speed golden-rule constants"),
                             ("simulate", cmd_simulate, "time evolution with virial recording"),
                             ("coercivity", cmd_coercivity, "constrained coercivity constants")):
        sp = sub.add_parser(name, help=text)
        _add_config_flags(sp)
        sp.set_defaults(func=func)

    dg = sub.add_parser("diagnose", help="decomposition and monitors on a saved simulate run")
    dg.add_argument("--trajectory", required=True, help="output directory of `simulate`")
    _add_config_flags(dg)
    dg.set_defaults(func=cmd_diagnose)

    sw = sub.add_parser("sweep", help="independent jobs along one numeric key")
    sw.add_argument("--axis", required=True)
    sw.add_argument("--values", default="", help="comma-separated values")
    _add_config_flags(sw)
    sw.set_defaults(func=cmd_sweep)

    prof = sub.add_parser("profiles", help="closed-form profiles")
    psub = prof.add_subparsers(dest="action", required=True)
    pd = psub.add_parser("dump", help="write special functions and the drift as CSV")
    _add_config_flags(pd)
    pd.set_defaults(func=cmd_profiles_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.show_defaults:
        print(defaults_table())
        return EXIT_OK
    if not getattr(args, "func", None):
        parser.print_help()
        return EXIT_CONFIG
    try:
        flags = {k: getattr(args, k) for k in FIELD_TYPES}
        cfg = parse_config(args.config, flags)
        return args.func(cfg, args)
    except (ConfigError, GridError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RegimeError, BlowUpError) as exc:
        print(f"regime rejection: {exc}", file=sys.stderr)
        return EXIT_REGIME


if __name__ == "__main__":
    sys.exit(main())
