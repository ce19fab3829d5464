"""Batch front-end: single runs, temperature pairs, eta sweeps and the
Monte Carlo / Lyapunov cross-check.

    antisync simulate  --config run.cfg --out results
    antisync variance  --set "temperatures=0,0.01" --out results
    antisync sweep     --set eta_grid=1000:5000:250 --out results
    antisync oracle    --seed 1 --out results

Every command is deterministic for a fixed configuration (seeds included);
re-runs produce byte-identical files.  Exit codes: 0 success, 2 configuration
error, 3 numerical failure, 4 oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import covariance, discord, meanfield, metrics, montecarlo
from .config import RunConfig, build_run_config, parse_config_text, parse_grid
from .errors import (AntisyncError, ConfigError, IntegrationError,
                     ParameterError, PhysicalityError)
from .model import MeanFieldState
from .solvers import SolverConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ORACLE = 4

_TRIU = [(i, j) for i in range(6) for j in range(i, 6)]


def _initial_state(cfg: RunConfig) -> MeanFieldState:
    if cfg.initial is None:
        return MeanFieldState(t=0.0)
    q_c, p_c, q_m, p_m, q_d, p_d = cfg.initial
    return MeanFieldState(t=0.0, q_c=q_c, p_c=p_c, q_m=q_m, p_m=p_m, q_d=q_d, p_d=p_d)


def _mf_solver(cfg: RunConfig, default_stride: float) -> SolverConfig:
    return SolverConfig(method=cfg.method,
                        rtol=cfg.rtol if cfg.rtol is not None else 1e-9,
                        atol=cfg.atol if cfg.atol is not None else 1e-9,
                        h=cfg.step if cfg.step is not None else 1e-3,
                        stride=cfg.stride if cfg.stride is not None else default_stride)


def _cov_solver(cfg: RunConfig, default_stride: float) -> SolverConfig:
    return SolverConfig(method=cfg.method,
                        rtol=cfg.rtol if cfg.rtol is not None else 1e-10,
                        atol=cfg.atol if cfg.atol is not None else 1e-12,
                        h=cfg.step if cfg.step is not None else 1e-3,
                        stride=cfg.stride if cfg.stride is not None else default_stride)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_simulate(cfg: RunConfig, outdir: Path) -> int:
    horizon = cfg.horizon if cfg.horizon is not None else 2e5
    series = meanfield.integrate(cfg.params, _initial_state(cfg), horizon,
                                 _mf_solver(cfg, default_stride=0.2))
    record = metrics.phase_record(series)
    lock = metrics.detect_locking(record.t, record.sum, cfg.window, cfg.lock_threshold)
    cycle = meanfield.detect_limit_cycle(series, cfg.window, cfg.drift_threshold)
    series.to_csv(outdir / "trajectory.csv")
    metrics.metrics_to_csv(outdir / "phases.csv", record)
    summary = {
        "locked": lock.locked,
        "locked_value": lock.locked_value,
        "trailing_std": lock.trailing_std,
        "converged": cycle.converged,
        "oscillating": cycle.oscillating,
        "amplitude_m": cycle.amplitude_m,
        "amplitude_d": cycle.amplitude_d,
        "period_estimate": cycle.period_estimate,
        "relative_drift": cycle.relative_drift,
        "flagged_fraction_m": float(np.mean(record.flagged_m)),
        "flagged_fraction_d": float(np.mean(record.flagged_d)),
        "horizon": horizon,
        "window": cfg.window,
        "stride": series.stats.stride,
        "method": series.stats.method,
        "n_steps": series.stats.n_steps,
    }
    _write_json(outdir / "summary.json", summary)
    print(f"simulate: locked={lock.locked} locked_value={lock.locked_value:.6g} "
          f"converged={cycle.converged}")
    return EXIT_OK


def _temperature_suffixes(temps) -> list:
    if len(temps) == 1:
        return [""]
    return [f"_T{T:g}" for T in temps]


def cmd_variance(cfg: RunConfig, outdir: Path) -> int:
    horizon = cfg.horizon if cfg.horizon is not None else 2e5
    temps = cfg.temperatures if cfg.temperatures is not None else [cfg.params.temperature]
    solver = _cov_solver(cfg, default_stride=1.0)
    initial = _initial_state(cfg)
    for T, suffix in zip(temps, _temperature_suffixes(temps)):
        params = cfg.params.with_temperature(T)
        if cfg.diagnostic_zero_noise:
            V0 = np.zeros((6, 6))
            D_override = np.zeros((6, 6))
        else:
            V0 = covariance.initial_covariance(params.n_bar)
            D_override = None
        traj, cov = covariance.propagate_joint(
            params, initial, V0, horizon, solver,
            strict_paper=cfg.strict_paper_drift, D_override=D_override,
            enforce_physicality=not cfg.diagnostic_zero_noise)
        record = metrics.phase_record(traj)
        var = metrics.phase_sum_variance_series(cov.V, record)
        s_p, s_a = metrics.sync_measures_series(cov.V, record)
        cov.to_csv(outdir / f"covariance{suffix}.csv")
        metrics.metrics_to_csv(outdir / f"variance{suffix}.csv", record,
                               var_phase_sum=var, s_p=s_p, s_a=s_a)
        tail = var[np.isfinite(var)]
        print(f"variance T={T:g}: final={tail[-1] if tail.size else math.nan:.6g} "
              f"max={np.nanmax(var) if np.isfinite(var).any() else math.nan:.6g}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, outdir: Path) -> int:
    horizon = cfg.horizon if cfg.horizon is not None else 2e5
    grid = cfg.eta_grid if cfg.eta_grid is not None else parse_grid("1000:5000:250")
    readout = cfg.readout_time if cfg.readout_time is not None else horizon
    if not 0 < readout <= horizon:
        raise ConfigError(f"readout_time {readout:g} outside (0, horizon]")
    solver = _cov_solver(cfg, default_stride=1.0)
    initial = _initial_state(cfg)
    rows = []
    for eta in grid:
        row = [eta] + [math.nan] * 5
        try:
            params = replace(cfg.params, eta=float(eta))
            V0 = covariance.initial_covariance(params.n_bar)
            traj, cov = covariance.propagate_joint(
                params, initial, V0, horizon, solver,
                strict_paper=cfg.strict_paper_drift)
            record = metrics.phase_record(traj)
            lock = metrics.detect_locking(record.t, record.sum, cfg.window,
                                          cfg.lock_threshold)
            i = int(np.argmin(np.abs(record.t - readout)))
            d_g = discord.gaussian_discord(discord.reduce(cov.V[i]),
                                           base=cfg.discord_log_base)
            s_p, s_a = metrics.sync_measures(cov.V[i], record.phi_m[i], record.phi_d[i])
            var = metrics.phase_sum_variance(cov.V[i], record.phi_m[i],
                                             record.phi_d[i], record.n_m[i],
                                             record.n_d[i])
            row = [eta, lock.locked_value if lock.locked else math.nan,
                   d_g, s_p, s_a, var]
        except AntisyncError as exc:
            print(f"sweep eta={eta:g}: {exc}", file=sys.stderr)
        rows.append(row)
    data = np.array(rows)
    meanfield.write_table(outdir / "sweep.csv",
                          "eta,locked_phase_sum,D_G,S_p,S_a,var_phase_sum",
                          [data[:, i] for i in range(6)])
    ok = np.isfinite(data[:, 1]) & np.isfinite(data[:, 2])
    if np.count_nonzero(ok) >= 3:
        from scipy.stats import spearmanr
        rho = float(spearmanr(data[ok, 1], data[ok, 2])[0])
        print(f"sweep: {np.count_nonzero(ok)}/{grid.size} points, "
              f"Spearman(locked_phase_sum, D_G) = {rho:.3f}")
    else:
        print(f"sweep: only {np.count_nonzero(ok)} usable points, "
              "Spearman correlation not computed")
    return EXIT_OK


def _drift_mode(explicit: str | None, cfg: RunConfig) -> bool:
    """True when the strict transcription of the drift matrix is requested."""
    if explicit is None:
        return cfg.strict_paper_drift
    return explicit == "strict_paper"


def cmd_oracle(cfg: RunConfig, outdir: Path) -> int:
    horizon = cfg.horizon if cfg.horizon is not None else 50.0
    step = cfg.step if cfg.step is not None else 2e-4
    k = cfg.oracle_samples
    times = horizon * np.arange(1, k + 1) / k
    params = cfg.params
    initial = _initial_state(cfg)
    V0 = covariance.initial_covariance(params.n_bar)

    mf_cfg = SolverConfig(method="rk4", h=step, stride=step,
                          max_samples=int(round(horizon / step)) + 2)
    mf_series = meanfield.integrate(params, initial, horizon, mf_cfg)

    lyap_cfg = SolverConfig(method="rk45",
                            rtol=cfg.rtol if cfg.rtol is not None else 1e-10,
                            atol=cfg.atol if cfg.atol is not None else 1e-12,
                            stride=horizon / k)
    _, cov = covariance.propagate_joint(
        params, initial, V0, horizon, lyap_cfg,
        strict_paper=_drift_mode(cfg.lyapunov_drift, cfg))
    idx = [int(np.argmin(np.abs(cov.t - t))) for t in times]
    V_lyap = cov.V[idx]

    est = montecarlo.simulate_ensemble(
        params, mf_series, V0, cfg.n_traj, step, cfg.seed, sample_times=times,
        strict_paper=_drift_mode(cfg.mc_drift, cfg))
    z_max = montecarlo.compare(V_lyap, est, times=times)

    per_row_z = np.max(
        np.where(est.stderr > 1e-15, np.abs(V_lyap - est.cov) / np.where(
            est.stderr > 1e-15, est.stderr, 1.0), 0.0), axis=(1, 2))
    header = ("t,"
              + ",".join(f"V_{i}{j}" for i, j in _TRIU) + ","
              + ",".join(f"SE_{i}{j}" for i, j in _TRIU) + ","
              + ",".join(f"VL_{i}{j}" for i, j in _TRIU) + ",z_max")
    cols = [est.times]
    cols += [est.cov[:, i, j] for i, j in _TRIU]
    cols += [est.stderr[:, i, j] for i, j in _TRIU]
    cols += [V_lyap[:, i, j] for i, j in _TRIU]
    cols += [per_row_z]
    meanfield.write_table(outdir / "oracle.csv", header, cols)
    print(f"oracle: n_traj={est.n_traj} failed={est.n_failed} "
          f"max z = {z_max:.3f} (threshold {cfg.z_threshold:g})")
    if z_max > cfg.z_threshold:
        print("oracle: Lyapunov and Monte Carlo covariances disagree", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "variance": cmd_variance,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="antisync",
        description="Hybrid optomechanical phase anti-synchronization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("simulate", "mean-field run: trajectory, phases, locking summary"),
            ("variance", "covariance propagation and phase-sum variance curves"),
            ("sweep", "eta sweep: locking value, discord and sync measures"),
            ("oracle", "Monte Carlo cross-check of the Lyapunov propagation")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="configuration file (key = value lines)")
        p.add_argument("--out", help="output directory (default: 'out')")
        p.add_argument("--seed", type=int, help="RNG seed override")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a single configuration key (repeatable)")
    return parser


def _load_config(args) -> RunConfig:
    mapping = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        mapping.update(parse_config_text(path.read_text()))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        mapping[key.strip()] = value.strip()
    cfg = build_run_config(mapping)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, outdir)
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, PhysicalityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except AntisyncError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
