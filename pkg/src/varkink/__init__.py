"""Kinks of phi^4 models with variable wave speed: stationary kink, spectrum,
dynamics of odd perturbations and virial diagnostics."""

from .config import RunConfig, parse_config
from .diagnostics import (CoercivityReport, DecompState, DiagnosticsContext, VirialRecorder,
                          VirialSeries, check_virial_identity, decompose, forcing_terms,
                          measure_coercivity, monitor_inequalities, quadratic_forms, virial_eval)
from .dynamics import FieldState, SimConfig, energy, make_initial, run, step
from .fredholm import (CallableKernel, FredholmReport, RegimeError, SemiSeparableKernel,
                       collocation_solve, estimate_nu, neumann_solve)
from .grid import Grid, GridError, GridFn, read_csv, write_csv
from .kink import KinkProfile, Linearization, build_kink, linearize
from .profiles import DriftProfile, SpeedProfile, builtin_drift, special, speed_to_drift
from .spectral import SpectralData, compute_spectrum, find_lambda0, find_lambda1, resolvent_L6

__all__ = [
    "CallableKernel", "CoercivityReport", "DecompState", "DiagnosticsContext", "DriftProfile",
    "FieldState", "FredholmReport", "Grid", "GridError", "GridFn", "KinkProfile", "Linearization",
    "RegimeError", "RunConfig", "SemiSeparableKernel", "SimConfig", "SpectralData", "SpeedProfile",
    "VirialRecorder", "VirialSeries", "build_kink", "builtin_drift", "check_virial_identity",
    "collocation_solve", "compute_spectrum", "decompose", "energy", "estimate_nu", "find_lambda0",
    "find_lambda1", "forcing_terms", "linearize", "make_initial", "measure_coercivity",
    "monitor_inequalities", "neumann_solve", "parse_config", "quadratic_forms", "read_csv",
    "resolvent_L6", "run", "special", "speed_to_drift", "step", "virial_eval", "write_csv",
]
