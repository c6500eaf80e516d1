"""Flat ``key = value`` experiment configuration.

Lines are ``key = value``; ``#`` starts a comment; lists are comma separated.
Unknown keys are rejected. See ``data/default.cfg`` for every key with its
default value.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .hopping import (DEFAULT_QUAD_POINTS, HoppingKernel, half_laplacian_kernel,
                      laplacian_kernel, load_kernel_table)

KERNEL_KINDS = ("laplacian", "half_laplacian", "table")
U64_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: str = "laplacian"
    d: int = 1
    R: int | None = None
    quad_points: int = DEFAULT_QUAD_POINTS
    kernel_table: str | None = None
    g: float = 1.0
    omega: float = 2.0
    rho0: float = 1.0
    epsilon: float = 0.5
    s_grid: tuple[float, ...] = (0.5,)
    z_fractions: tuple[float, ...] = (0.05, 0.2, 0.5)
    ladder: tuple[int, ...] = (8, 16, 32)
    n_realizations: int = 4000
    master_seed: int = 20240611
    n_energy: int = 40
    t_max: float = 1000.0
    dt_factor: float = 0.1
    threads: int = 1
    out_dir: str = "out"
    # per-check panel sizes used by ``report``
    schur_instances: int = 200
    eigen_instances: int = 100
    structure_instances: int = 100
    structure_L: int = 25
    correlator_instances: int = 100
    correlator_L: int = 25
    moments_L: int = 16
    green_L: int = 12
    green_realizations: int = 2000
    deep_rho0: float = 40.0
    dynamics_ladder: tuple[int, ...] = (32, 64)
    dynamics_realizations: int = 8

    def kernel_object(self) -> HoppingKernel:
        if self.kernel == "laplacian":
            return laplacian_kernel(self.d)
        if self.kernel == "half_laplacian":
            return half_laplacian_kernel(self.d, self.R, self.quad_points)
        return load_kernel_table(self.kernel_table, self.d)

    def replace(self, **changes: Any) -> "ExperimentConfig":
        cfg = dataclasses.replace(self, **changes)
        validate(cfg)
        return cfg

    def as_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ", ".join(repr(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _parse_value(name: str, raw: str, ftype: Any):
    t = str(ftype)
    try:
        if "tuple[float" in t:
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if "tuple[int" in t:
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if t.startswith("int | None"):
            return None if raw in ("", "none", "None") else int(raw)
        if t.startswith("str | None"):
            return None if raw in ("", "none", "None") else raw
        if t == "int":
            return int(raw, 0)
        if t == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r} ({exc})") from None


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def validate(cfg: ExperimentConfig) -> None:
    _require(cfg.kernel in KERNEL_KINDS, f"kernel: expected one of {KERNEL_KINDS}, got {cfg.kernel!r}")
    _require(cfg.d in (1, 2, 3), f"d: expected 1, 2 or 3, got {cfg.d}")
    _require(cfg.kernel != "table" or cfg.kernel_table is not None,
             "kernel_table: required when kernel = table")
    _require(cfg.R is None or cfg.R >= 1, f"R: must be >= 1, got {cfg.R}")
    _require(cfg.quad_points >= 16, f"quad_points: must be >= 16, got {cfg.quad_points}")
    _require(cfg.g >= 0.0, f"g: must be >= 0, got {cfg.g}")
    _require(cfg.omega > 0.0, f"omega: must be > 0, got {cfg.omega}")
    _require(cfg.rho0 > 0.0, f"rho0: must be > 0, got {cfg.rho0}")
    _require(cfg.deep_rho0 > 0.0, f"deep_rho0: must be > 0, got {cfg.deep_rho0}")
    _require(cfg.epsilon > 0.0, f"epsilon: must be > 0, got {cfg.epsilon}")
    _require(len(cfg.s_grid) > 0 and all(0.0 < s < 1.0 for s in cfg.s_grid),
             f"s_grid: every s must lie in (0, 1), got {cfg.s_grid}")
    _require(len(cfg.z_fractions) > 0 and all(0.0 < f < 1.0 for f in cfg.z_fractions),
             f"z_fractions: every fraction must lie in (0, 1), got {cfg.z_fractions}")
    for name in ("ladder", "dynamics_ladder"):
        lad = getattr(cfg, name)
        _require(len(lad) > 0 and all(L >= 1 for L in lad), f"{name}: box sizes must be >= 1, got {lad}")
        _require(all(a < b for a, b in zip(lad, lad[1:])), f"{name}: must be strictly ascending, got {lad}")
    _require(cfg.n_realizations >= 100, f"n_realizations: must be >= 100, got {cfg.n_realizations}")
    _require(cfg.green_realizations >= 2, f"green_realizations: must be >= 2, got {cfg.green_realizations}")
    _require(0 <= cfg.master_seed <= U64_MAX, f"master_seed: must fit in 64 unsigned bits, got {cfg.master_seed}")
    _require(cfg.n_energy >= 6 and cfg.n_energy % 2 == 0,
             f"n_energy: must be even and >= 6, got {cfg.n_energy}")
    _require(cfg.t_max > 0.0, f"t_max: must be > 0, got {cfg.t_max}")
    _require(0.0 < cfg.dt_factor <= 1.0, f"dt_factor: must lie in (0, 1], got {cfg.dt_factor}")
    _require(cfg.threads >= 1, f"threads: must be >= 1, got {cfg.threads}")
    for name in ("schur_instances", "eigen_instances", "structure_instances", "correlator_instances",
                 "structure_L", "correlator_L", "moments_L", "green_L", "dynamics_realizations"):
        _require(getattr(cfg, name) >= 1, f"{name}: must be >= 1, got {getattr(cfg, name)}")


def parse_config(text: str) -> ExperimentConfig:
    types = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, types[key])
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return parse_config(default_config_text())
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def default_config_text() -> str:
    return resources.files("photonloc").joinpath("data/default.cfg").read_text()
