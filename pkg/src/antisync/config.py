"""Plain-text configuration files and run options for the batch commands.

Grammar: one ``key = value`` per line, ``#`` starts a comment, blank lines
ignored.  Keys are either SystemParams field names (see model.PARAM_KEYS) or
run options (RUN_KEYS below); anything else is an error.  Values given via
``--set key=value`` override the file.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import PARAM_KEYS, SystemParams, params_from_mapping


def parse_config_text(text: str) -> dict:
    """key/value pairs from config-file text; duplicate keys are an error."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_grid(spec: str) -> np.ndarray:
    """Sweep grid: either 'a,b,c,...' or 'start:stop:step' (stop inclusive).

    The grid must be strictly increasing.
    """
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid range must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("grid step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        grid = start + step * np.arange(n)
    else:
        try:
            grid = np.array([float(p) for p in spec.split(",") if p.strip() != ""])
        except ValueError:
            raise ConfigError(f"cannot parse grid {spec!r}") from None
    if grid.size == 0:
        raise ConfigError("empty sweep grid")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ConfigError("sweep grid must be strictly increasing")
    return grid


def _parse_bool(raw: str) -> bool:
    low = str(raw).strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _parse_drift_mode(raw: str) -> str:
    low = str(raw).strip().lower()
    if low in ("corrected", "strict_paper"):
        return low
    raise ConfigError(f"drift mode must be 'corrected' or 'strict_paper', got {raw!r}")


@dataclass
class RunConfig:
    """Typed run options plus the physical parameters.

    Fields left as None fall back to per-command defaults (resolved by the
    CLI); see README for the full key reference.
    """

    params: SystemParams = field(default_factory=SystemParams)
    horizon: float | None = None
    stride: float | None = None
    window: float = 1e4
    lock_threshold: float = 0.1
    drift_threshold: float = 1e-3
    method: str = "rk45"
    rtol: float | None = None
    atol: float | None = None
    step: float | None = None
    n_traj: int = 10_000
    seed: int = 1
    eta_grid: np.ndarray | None = None
    temperatures: list | None = None
    readout_time: float | None = None
    strict_paper_drift: bool = False
    lyapunov_drift: str | None = None
    mc_drift: str | None = None
    discord_log_base: float = 2.0
    oracle_samples: int = 1
    z_threshold: float = 4.0
    initial: list | None = None
    diagnostic_zero_noise: bool = False
    out: str = "out"


_RUN_PARSERS = {
    "horizon": float,
    "stride": float,
    "window": float,
    "lock_threshold": float,
    "drift_threshold": float,
    "method": lambda s: str(s).strip(),
    "rtol": float,
    "atol": float,
    "step": float,
    "n_traj": lambda s: int(float(s)),
    "seed": lambda s: int(float(s)),
    "eta_grid": parse_grid,
    "temperatures": lambda s: [float(p) for p in str(s).split(",") if p.strip() != ""],
    "readout_time": float,
    "strict_paper_drift": _parse_bool,
    "lyapunov_drift": _parse_drift_mode,
    "mc_drift": _parse_drift_mode,
    "discord_log_base": lambda s: float(np.e) if str(s).strip().lower() == "e" else float(s),
    "oracle_samples": lambda s: int(float(s)),
    "z_threshold": float,
    "initial": lambda s: [float(p) for p in str(s).split(",")],
    "diagnostic_zero_noise": _parse_bool,
    "out": lambda s: str(s).strip(),
}

RUN_KEYS = tuple(_RUN_PARSERS)


def build_run_config(mapping: dict) -> RunConfig:
    """RunConfig from raw key/value strings; unknown keys are an error."""
    param_items = {}
    run_items = {}
    for key, raw in mapping.items():
        if key in PARAM_KEYS:
            param_items[key] = raw
        elif key in RUN_KEYS:
            try:
                run_items[key] = _RUN_PARSERS[key](raw)
            except ConfigError:
                raise
            except (TypeError, ValueError):
                raise ConfigError(f"cannot parse value for {key!r}: {raw!r}") from None
        else:
            known = ", ".join(sorted(PARAM_KEYS + RUN_KEYS))
            raise ConfigError(f"unknown configuration key {key!r} (known keys: {known})")
    params = params_from_mapping(param_items)
    cfg = RunConfig(params=params, **run_items)
    _check_run_config(cfg)
    return cfg


def _check_run_config(cfg: RunConfig) -> None:
    if cfg.horizon is not None and cfg.horizon <= 0:
        raise ConfigError("horizon must be positive")
    if cfg.initial is not None and len(cfg.initial) != 6:
        raise ConfigError("initial takes exactly six values: q_c,p_c,q_m,p_m,q_d,p_d")
    for name in ("stride", "window", "lock_threshold", "drift_threshold",
                 "rtol", "atol", "step", "readout_time", "z_threshold"):
        v = getattr(cfg, name)
        if v is not None and not v > 0:
            raise ConfigError(f"{name} must be positive, got {v}")
    if cfg.method not in ("rk45", "rk4"):
        raise ConfigError(f"method must be 'rk45' or 'rk4', got {cfg.method!r}")
    if cfg.n_traj < 2:
        raise ConfigError("n_traj must be >= 2")
    if cfg.seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    if cfg.oracle_samples < 1:
        raise ConfigError("oracle_samples must be >= 1")
    if cfg.temperatures is not None:
        if not 1 <= len(cfg.temperatures) <= 2:
            raise ConfigError("temperatures takes one or two comma-separated values")
        if any(T < 0 for T in cfg.temperatures):
            raise ConfigError("temperatures must be >= 0")
    if cfg.discord_log_base <= 1.0:
        raise ConfigError("discord_log_base must exceed 1")
