"""Shared fixtures: cached stationary pipelines and the acceptance summary."""

from __future__ import annotations

import functools

import numpy as np
import pytest

from varkink.grid import Grid
from varkink.kink import build_kink, linearize
from varkink.profiles import builtin_drift
from varkink.spectral import compute_spectrum

ACCEPTANCE_KEY = pytest.StashKey[dict]()


@functools.lru_cache(maxsize=None)
def pipeline(delta: float, L: float = 40.0, h: float = 0.005, oracle: bool = True):
    """(kink, linearization, spectrum) for the canonical drift, cached per process."""
    grid = Grid(L, h)
    kink = build_kink(builtin_drift("canonical", delta, grid))
    lin = linearize(kink)
    spec = compute_spectrum(lin, oracle=oracle)
    return kink, lin, spec


@pytest.fixture(scope="session")
def pipe():
    return pipeline


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0x5EED)


@pytest.fixture(scope="session")
def criterion_log(request):
    log = {}
    request.config.stash[ACCEPTANCE_KEY] = log
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE_KEY, None)
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        ok, title, detail = log[number]
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
