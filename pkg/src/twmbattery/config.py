"""Flat ``key = value`` run configuration shared by the CLI and figure recipes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .core import TOL

MODES = ("run", "sweep", "opfind", "twoqubit", "figure")

# symbolic values accepted in place of numbers
SYMBOLS = {"w": ("tilde",), "Q0sq": ("max",), "m": ("eta2",), "tau": ("tau_gamma",), "J": ("default",)}

DEFAULTS: dict[str, object] = {
    "P0": 0.9,
    "Q0sq": 0.0,
    "m": 0.4,
    "w": "tilde",
    "tau": "tau_gamma",
    "f": 0.3,
    "gamma": 0.01,
    "omega": 1.0,
    "q": 0.1,
    "m1": 0.5,
    "m2": 0.6,
    "w1": 0.21,
    "w2": 0.21,
    "J": "default",
    "cells": 1.0,
    "points": 101.0,
}

GRIDDABLE = ("P0", "Q0sq", "m", "w", "tau", "f", "q", "m1", "m2", "w1", "w2")
UNIT_INTERVAL = ("P0", "m", "w", "q", "m1", "m2", "w1", "w2")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    count: int

    def values(self) -> list[float]:
        if self.count == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.count - 1)
        return [self.start + k * step for k in range(self.count - 1)] + [self.stop]

    def __str__(self) -> str:
        return f"{self.start!r}:{self.stop!r}:{self.count}"

    @classmethod
    def parse(cls, text: str) -> "Grid":
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must look like start:stop:count")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"grid {text!r}: {exc}") from None
        if count < 1:
            raise ConfigError(f"grid {text!r}: count must be >= 1")
        return cls(start, stop, count)


@dataclass(frozen=True)
class SweepConfig:
    mode: str = "run"
    params: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    out: str | None = None
    tol: float = TOL
    workers: int = 1
    resolution: int = 64
    scan: str = "m"
    figure: str | None = None

    def value(self, key: str):
        return self.params.get(key, DEFAULTS[key])

    def bath_values(self) -> tuple[float, float, float]:
        return float(self.value("gamma")), float(self.value("f")), float(self.value("omega"))

    def tau(self) -> float:
        tau = self.value("tau")
        return 1.0 / float(self.value("gamma")) if tau == "tau_gamma" else float(tau)

    def with_updates(self, **changes) -> "SweepConfig":
        return replace(self, **changes)


def parse_value(key: str, text: str):
    if key not in DEFAULTS:
        raise ConfigError(f"unknown parameter {key!r}")
    text = text.strip()
    if text in SYMBOLS.get(key, ()):
        return text
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}={text!r} is not a number") from None
    check_value(key, value)
    return value


def check_value(key: str, value: float) -> None:
    if math.isnan(value):
        raise ConfigError(f"{key} is nan")
    if key in UNIT_INTERVAL and not 0.0 <= value <= 1.0:
        raise ConfigError(f"{key}={value} outside [0, 1]")
    if key == "Q0sq" and value < 0:
        raise ConfigError("Q0sq must be >= 0")
    if key == "f" and not 0.0 <= value < 0.5:
        raise ConfigError(f"f={value} outside [0, 1/2)")
    if key in ("gamma", "omega") and not value > 0:
        raise ConfigError(f"{key} must be > 0")
    if key == "tau" and value < 0:
        raise ConfigError("tau must be >= 0")
    if key in ("cells", "points") and (value != int(value) or value < 1):
        raise ConfigError(f"{key} must be a positive integer")


def check_grid(key: str, grid: Grid) -> None:
    if key not in GRIDDABLE:
        raise ConfigError(f"parameter {key!r} cannot be swept")
    check_value(key, grid.start)
    check_value(key, grid.stop)


_SCALARS = {"mode": str, "out": str, "tol": float, "workers": int, "resolution": int, "scan": str, "figure": str}


def _apply(cfg: SweepConfig, key: str, text: str) -> SweepConfig:
    if key.startswith("grid."):
        name = key[5:]
        grid = Grid.parse(text)
        check_grid(name, grid)
        return replace(cfg, grids={**cfg.grids, name: grid})
    if key in _SCALARS:
        try:
            value = _SCALARS[key](text.strip())
        except ValueError:
            raise ConfigError(f"{key}={text!r} is not a valid {_SCALARS[key].__name__}") from None
        if key == "mode" and value not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if key == "workers" and value < 1:
            raise ConfigError("workers must be >= 1")
        if key == "tol" and not value > 0:
            raise ConfigError("tol must be > 0")
        return replace(cfg, **{key: value})
    return replace(cfg, params={**cfg.params, key: parse_value(key, text)})


def loads(text: str, base: SweepConfig | None = None) -> SweepConfig:
    cfg = base or SweepConfig()
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg = _apply(cfg, key, value)
    return cfg


def load(path: str, base: SweepConfig | None = None) -> SweepConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read(), base)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None


def apply_overrides(cfg: SweepConfig, sets=(), grids=()) -> SweepConfig:
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set {item!r} must look like key=value")
        key, value = item.split("=", 1)
        cfg = _apply(cfg, key.strip(), value)
    for item in grids:
        if "=" not in item:
            raise ConfigError(f"--grid {item!r} must look like key=start:stop:count")
        key, value = item.split("=", 1)
        cfg = _apply(cfg, "grid." + key.strip(), value)
    return cfg


def dumps(cfg: SweepConfig) -> str:
    lines = [f"mode = {cfg.mode}"]
    if cfg.out is not None:
        lines.append(f"out = {cfg.out}")
    lines += [f"tol = {cfg.tol!r}", f"workers = {cfg.workers}", f"resolution = {cfg.resolution}", f"scan = {cfg.scan}"]
    if cfg.figure is not None:
        lines.append(f"figure = {cfg.figure}")
    for key, value in cfg.params.items():
        lines.append(f"{key} = {value if isinstance(value, str) else repr(value)}")
    for key, grid in cfg.grids.items():
        lines.append(f"grid.{key} = {grid}")
    return "\n".join(lines) + "\n"
