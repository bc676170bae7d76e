"""Flat ``dotted.key = value`` run configuration."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _fmt(value):
    if isinstance(value, tuple):
        return ", ".join(_fmt(x) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunConfig:
    profile_A: float = 1.0
    grid_v_min: float = -9.0
    grid_v_max: float = 9.0
    grid_n: int = 4097
    mode_k: tuple = (1, 2, 3)
    data_shape: str = "basic"
    data_sigma_k: float = 0.0
    evolve_dt: float = 0.0  # 0 selects the stability-based default
    evolve_t_max: float = 50.0
    evolve_snapshot_times: tuple = (1.0, 5.0, 10.0)
    spectral_eps_ladder: tuple = (0.08, 0.04, 0.02)
    spectral_w_stride: int = 4
    spectral_method: str = "plemelj"
    spectral_eps_mode: str = "relative"
    fit_t_lo: float = 20.0
    fit_t_hi: float = 200.0
    output_dir: str = "out"
    runtime_workers: int = field(default_factory=lambda: os.cpu_count() or 1)


_PARSERS = {
    float: float,
    int: int,
    str: str,
}

_TUPLE_PARSERS = {
    "mode_k": _ints,
    "evolve_snapshot_times": _floats,
    "spectral_eps_ladder": _floats,
}


def _attr(key: str) -> str:
    return key.replace(".", "_", 1)


def validate(cfg: RunConfig) -> RunConfig:
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(f"{key}: {msg}")

    need(math.isfinite(cfg.profile_A) and cfg.profile_A > 0, "profile.A", "must be positive and finite")
    need(cfg.grid_v_min < 0 < cfg.grid_v_max, "grid.v_min", "grid must straddle v = 0 with v_min < v_max")
    need(cfg.grid_n >= 33, "grid.n", "needs at least 33 nodes")
    need(len(cfg.mode_k) > 0 and all(k != 0 for k in cfg.mode_k), "mode.k", "non-empty list of nonzero modes")
    need(cfg.data_shape in ("basic", "sigma"), "data.shape", "one of basic, sigma")
    need(math.isfinite(cfg.data_sigma_k), "data.sigma_k", "must be finite")
    need(cfg.evolve_dt >= 0, "evolve.dt", "must be non-negative (0 selects the default)")
    need(cfg.evolve_t_max > 0, "evolve.t_max", "must be positive")
    need(all(0 <= s <= cfg.evolve_t_max for s in cfg.evolve_snapshot_times),
         "evolve.snapshot_times", "must lie in [0, evolve.t_max]")
    need(len(cfg.spectral_eps_ladder) >= 3, "spectral.eps_ladder", "ladder needs at least 3 entries")
    need(all(e > 0 for e in cfg.spectral_eps_ladder), "spectral.eps_ladder", "entries must be positive")
    need(len(set(cfg.spectral_eps_ladder)) == len(cfg.spectral_eps_ladder),
         "spectral.eps_ladder", "entries must be distinct")
    need(cfg.spectral_w_stride >= 1, "spectral.w_stride", "must be >= 1")
    need(cfg.spectral_method in ("plemelj", "ladder"), "spectral.method", "one of plemelj, ladder")
    need(cfg.spectral_eps_mode in ("relative", "absolute"), "spectral.eps_mode", "one of relative, absolute")
    need(0 < cfg.fit_t_lo < cfg.fit_t_hi, "fit.t_lo", "need 0 < fit.t_lo < fit.t_hi")
    need(cfg.fit_t_hi / cfg.fit_t_lo >= 10 - 1e-9, "fit.t_hi", "fit window must span one decade")
    need(bool(cfg.output_dir), "output.dir", "must be non-empty")
    need(cfg.runtime_workers >= 1, "runtime.workers", "must be >= 1")
    return cfg


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    known = {f.name: f for f in fields(RunConfig)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        name = _attr(key)
        if name not in known:
            raise ConfigError(f"{key}: unknown key")
        try:
            if name in _TUPLE_PARSERS:
                parsed = _TUPLE_PARSERS[name](value)
            else:
                parsed = _PARSERS[type(getattr(cfg, name))](value)
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {value!r} ({exc})") from None
        setattr(cfg, name, parsed)
    return validate(cfg)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        lines.append(f"{f.name.replace('_', '.', 1)} = {_fmt(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"
