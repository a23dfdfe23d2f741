"""Run configuration: defaults < config file < command-line flags.

A config file is JSON or YAML holding a flat mapping of the keys below.
A ``manifest.json`` written by a previous run is accepted as well; its
``config`` entry is used, which reproduces that run.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .analysis import DEFAULT_DELTAS, DEFAULT_T_MAX, PRESETS, AXES
from .classical import MAPS
from .floquet import FloquetError, RotorParams

logger = logging.getLogger(__name__)

COMMANDS = ("run", "sweep", "spectral", "classical", "reproduce-figure")
MODELS = ("cqkr", "sqkr")
CONSTRUCTIONS = (None, "bessel", "split")
DEFAULT_GRIDS = {
    "K": "0.1:10:25:log",
    "hbar_s": "0.8:2.4:17",
    "alpha": "0.1:0.9:17",
    "N": "512:2048:3:log",
}


class ConfigError(ValueError):
    """Invalid or incomplete configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str = "run"
    preset: str | None = None
    model: str | None = None
    K: float | None = None
    hbar_s: float | None = None
    alpha: float | None = None
    N: int = 1024
    t_max: int | None = None
    seed: int = 0
    initial: str = "delta:0"
    deltas: list = field(default_factory=lambda: list(DEFAULT_DELTAS))
    n_haar: int = 0
    window: list | None = None
    construction: str | None = None
    out: str = "out"
    plots: bool = True
    axis: str = "K"
    grid: str | None = None
    map: str = "standard"
    n_orbits: int = 49
    n_steps: int = 500
    figure: str | None = None
    workers: int | None = None

    # -- resolved views ------------------------------------------------------

    def params(self) -> RotorParams:
        return RotorParams(K=self.K, hbar_s=self.hbar_s, alpha=self.alpha)

    def t_window(self) -> tuple[int, int]:
        return tuple(self.window)

    def grid_values(self) -> list:
        return parse_grid(self.grid, integer=self.axis == "N")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


KEYS = tuple(f.name for f in dataclasses.fields(RunConfig))


def parse_grid(spec: str, integer: bool = False) -> list:
    """``"start:stop:count[:log]"`` to a list of grid values."""
    parts = str(spec).split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
        raise ConfigError(f"grid {spec!r} is not of the form start:stop:count[:log]")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"grid {spec!r}: {exc}") from None
    if count < 1:
        raise ConfigError("grid count must be >= 1")
    if len(parts) == 4:
        if start <= 0 or stop <= 0:
            raise ConfigError("log grid needs positive bounds")
        vals = np.geomspace(start, stop, count)
    else:
        vals = np.linspace(start, stop, count)
    if integer:
        ints = [int(round(v)) for v in vals]
        if any(v % 2 or v < 2 for v in ints):
            raise ConfigError(f"N grid {ints} must hold even sizes >= 2")
        return ints
    return [float(v) for v in vals]


def load_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]  # a previous run's manifest
    return data


def _coerce(key: str, value):
    if value is None:
        return None
    target = {f.name: f.type for f in dataclasses.fields(RunConfig)}[key]
    try:
        if target.startswith("int"):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"{value} is not an integer")
            return int(value)
        if target.startswith("float"):
            return float(value)
        if target.startswith("bool"):
            if not isinstance(value, bool):
                raise ValueError(f"{value!r} is not a boolean")
            return value
        if target.startswith("list"):
            return [int(v) if key == "deltas" or key == "window" else v for v in value]
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from None


def merge(file_values: dict | None, flag_values: dict | None) -> tuple[RunConfig, dict]:
    """Merge layers and return the config plus the source of every key."""
    file_values = file_values or {}
    flag_values = flag_values or {}
    for layer, name in ((file_values, "config file"), (flag_values, "flags")):
        unknown = sorted(set(layer) - set(KEYS))
        if unknown:
            raise ConfigError(f"unknown {name} keys: {unknown}; valid keys are {list(KEYS)}")
    values = RunConfig().to_json()
    sources = {k: "default" for k in values}
    for layer, name in ((file_values, "file"), (flag_values, "flag")):
        for k, v in layer.items():
            if v is None and name == "flag":
                continue
            v = _coerce(k, v)
            if v != values[k]:
                logger.info("config %s: %r -> %r (%s)", k, values[k], v, name)
            values[k] = v
            sources[k] = name
    cfg = RunConfig(**values)
    _resolve(cfg, sources)
    return cfg, sources


def _default(cfg, sources, key, value):
    if getattr(cfg, key) is None:
        setattr(cfg, key, value)
        sources[key] = "default"
        logger.info("config %s: default %r", key, value)


def _resolve(cfg: RunConfig, sources: dict):
    """Fill derived defaults and validate; raises ConfigError."""
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}; expected one of {COMMANDS}")
    if cfg.preset is not None:
        cfg.preset = cfg.preset.upper()
        if cfg.preset not in PRESETS:
            raise ConfigError(f"unknown preset {cfg.preset!r}; expected one of {sorted(PRESETS)}")
    if cfg.model is not None and cfg.model not in MODELS:
        raise ConfigError(f"unknown model {cfg.model!r}; expected one of {MODELS}")
    if cfg.preset is None and cfg.K is None:
        _default(cfg, sources, "preset", "PL" if cfg.model == "sqkr" or cfg.alpha is not None else "DL")
    base = PRESETS[cfg.preset or ("PL" if cfg.model == "sqkr" else "DL")]
    _default(cfg, sources, "K", base.K)
    _default(cfg, sources, "hbar_s", base.hbar_s)
    if cfg.model is None:
        _default(cfg, sources, "model", "sqkr" if cfg.alpha is not None or base.alpha is not None else "cqkr")
    if cfg.model == "sqkr":
        _default(cfg, sources, "alpha", base.alpha if base.alpha is not None else PRESETS["PL"].alpha)
    elif cfg.alpha is not None:
        raise ConfigError("alpha is only meaningful for the sqkr model")
    _default(cfg, sources, "t_max", DEFAULT_T_MAX.get(cfg.preset or "", 1000))
    if cfg.t_max < 0:
        raise ConfigError("t_max must be >= 0")
    if cfg.window is None:
        cfg.window = [cfg.t_max // 2, cfg.t_max]
        sources["window"] = "default"
    if len(cfg.window) != 2 or not 0 <= cfg.window[0] <= cfg.window[1] <= cfg.t_max:
        raise ConfigError(f"window {cfg.window} must satisfy 0 <= t1 <= t2 <= t_max")
    if cfg.N < 2 or cfg.N % 2:
        raise ConfigError(f"N must be even and >= 2, got {cfg.N}")
    if cfg.construction not in CONSTRUCTIONS:
        raise ConfigError(f"unknown construction {cfg.construction!r}")
    if cfg.axis not in AXES:
        raise ConfigError(f"unknown sweep axis {cfg.axis!r}; expected one of {AXES}")
    if cfg.axis == "alpha" and cfg.model != "sqkr":
        raise ConfigError("an alpha sweep needs the sqkr model")
    if cfg.grid is None:
        cfg.grid = DEFAULT_GRIDS[cfg.axis]
        sources["grid"] = "default"
    cfg.grid_values()
    if cfg.map not in MAPS:
        raise ConfigError(f"unknown map {cfg.map!r}; expected one of {MAPS}")
    if cfg.command == "classical" and cfg.map == "singular" and cfg.alpha is None:
        raise ConfigError("the singular map needs alpha")
    if cfg.n_orbits < 1 or cfg.n_steps < 1:
        raise ConfigError("n_orbits and n_steps must be >= 1")
    if cfg.n_haar < 0:
        raise ConfigError("n_haar must be >= 0")
    parse_initial(cfg.initial, cfg.seed)
    try:
        cfg.params()
    except (FloquetError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def parse_initial(spec: str, seed: int) -> tuple[str, int]:
    """``delta:<m>``, ``haar`` or ``haar:<seed>``."""
    kind, _, arg = str(spec).partition(":")
    if kind not in ("delta", "haar"):
        raise ConfigError(f"initial state {spec!r}; expected delta:<m> or haar[:<seed>]")
    if kind == "haar" and not arg:
        return kind, seed
    try:
        return kind, int(arg)
    except ValueError:
        raise ConfigError(f"initial state {spec!r}: {arg!r} is not an integer") from None
