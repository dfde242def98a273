"""Run configuration: defaults table, `key = value` files and range checks.

Precedence is command-line flags > config file > defaults. Unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

DEFAULT_SEED = 0x5EED


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    delta: float = 0.02
    family: str = "canonical"
    speed_profile: str = ""
    L: float = 40.0
    h: float = 0.005
    epsilon: float = 0.01
    init: str = "internal-mode"
    T_final: float = 400.0
    dt: float = 0.0  # 0 selects 0.4 h
    boundary: str = "sponge"
    sponge_width: float = 10.0
    sample_every: int = 25
    snapshot_every: int = 400
    output: str = "out"
    seed: int = DEFAULT_SEED
    convention: str = "consistent"
    coercivity_stride: int = 4
    coercivity_samples: int = 1000
    nonlinear: bool = True
    workers: int = 1
    tol: float = 1e-12

    @property
    def time_step(self) -> float:
        return self.dt if self.dt > 0 else 0.4 * self.h

    def echo(self) -> dict:
        return dataclasses.asdict(self)


DEFAULTS = RunConfig()
FIELD_TYPES = {f.name: type(getattr(DEFAULTS, f.name)) for f in dataclasses.fields(RunConfig)}
CHOICES = {
    "family": ("canonical", "bump"),
    "init": ("internal-mode", "radiation", "mixed"),
    "boundary": ("dirichlet", "sponge"),
    "convention": ("consistent", "as-printed"),
}


def _convert(key: str, raw):
    kind = FIELD_TYPES[key]
    if isinstance(raw, kind) and not (kind is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text, 0)
        if kind is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{key} = {text!r} is not a valid {kind.__name__}") from None
    return text


def read_config_file(path) -> dict:
    """Parse flat `key = value` lines; `#` starts a comment."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} does not exist")
    out = {}
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


def _range(key, value, lo, hi, lo_open=False, hi_open=False):
    bad = (value < lo or (lo_open and value == lo)) or (value > hi or (hi_open and value == hi))
    if bad:
        left = "(" if lo_open else "["
        right = ")" if hi_open else "]"
        raise ConfigError(f"{key} = {value} outside admissible range {left}{lo}, {hi}{right}")


def validate(cfg: RunConfig) -> RunConfig:
    _range("delta", cfg.delta, 0.0, 0.1)
    _range("epsilon", cfg.epsilon, 0.0, 0.05, lo_open=True)
    _range("L", cfg.L, 0.0, 1e4, lo_open=True)
    _range("h", cfg.h, 0.0, 1.0, lo_open=True)
    _range("dt", cfg.time_step, 0.0, 0.9 * cfg.h, lo_open=True)
    _range("T_final", cfg.T_final, 0.0, 1e6, lo_open=True)
    _range("sponge_width", cfg.sponge_width, 0.0, cfg.L, lo_open=True, hi_open=True)
    _range("sample_every", cfg.sample_every, 1, 10 ** 9)
    _range("snapshot_every", cfg.snapshot_every, 1, 10 ** 9)
    _range("seed", cfg.seed, 0, 2 ** 64 - 1)
    _range("coercivity_stride", cfg.coercivity_stride, 1, 64)
    _range("coercivity_samples", cfg.coercivity_samples, 0, 10 ** 6)
    _range("workers", cfg.workers, 1, 256)
    _range("tol", cfg.tol, 0.0, 1e-3, lo_open=True)
    ratio = cfg.L / cfg.h
    if abs(ratio - round(ratio)) > 1e-9 * ratio:
        raise ConfigError(f"L / h = {ratio} must be an integer")
    for key, allowed in CHOICES.items():
        if getattr(cfg, key) not in allowed:
            raise ConfigError(f"{key} = {getattr(cfg, key)!r} not one of {allowed}")
    return cfg


def parse_config(path=None, flags: dict | None = None) -> RunConfig:
    """Merge defaults, the optional file and explicit flags (None values are ignored)."""
    values = {}
    if path:
        values.update(read_config_file(path))
    for key, value in (flags or {}).items():
        if value is None:
            continue
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _convert(key, value)
    return validate(dataclasses.replace(DEFAULTS, **values))


def defaults_table() -> str:
    rows = [f"{k:<20} {getattr(DEFAULTS, k)!r}" for k in FIELD_TYPES]
    return "\n".join(rows)
