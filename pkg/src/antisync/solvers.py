"""Fixed-step RK4 and adaptive Dormand-Prince RK45 for the small ODE systems
used throughout the package.

Both steppers land exactly on every requested sample time (the adaptive
controller clips the step at sample boundaries), so stored series have
bit-reproducible, strictly increasing time stamps.  The right-hand sides are
numba kernels with the signature ``rhs(t, y, pvec, out)``; the steppers are
generic over the rhs and get specialised per system at JIT time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError, IntegrationError

_STATUS_OK = 0
_STATUS_NONFINITE = 1
_STATUS_UNDERFLOW = 2


@dataclass(frozen=True)
class SolverConfig:
    """Integration settings shared by the mean-field and joint propagators.

    method : "rk45" (adaptive Dormand-Prince 5(4)) or "rk4" (fixed step).
    rtol, atol : adaptive error tolerances.
    h : fixed step for rk4 (sub-divided to land on sample times).
    h0, hmax : initial and maximal adaptive step.
    stride : sampling interval of the stored output.
    max_samples : stored-sample cap; the stride is coarsened by an integer
        factor if the requested grid would exceed it.
    """

    method: str = "rk45"
    rtol: float = 1e-9
    atol: float = 1e-9
    h: float = 1e-3
    h0: float = 1e-4
    hmax: float = 1.0
    stride: float = 0.2
    max_samples: int = 1_000_000

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ConfigError(f"method must be 'rk45' or 'rk4', got {self.method!r}")
        for name in ("rtol", "atol", "h", "h0", "hmax", "stride"):
            v = getattr(self, name)
            if not (v > 0 and np.isfinite(v)):
                raise ConfigError(f"SolverConfig.{name} must be positive and finite, got {v}")
        if self.max_samples < 2:
            raise ConfigError("SolverConfig.max_samples must be >= 2")


@dataclass(frozen=True)
class SolverStats:
    """Per-run integrator metadata attached to stored series."""

    method: str
    rtol: float
    atol: float
    h: float
    stride: float
    n_steps: int
    n_rejected: int


def sample_grid(t0: float, t_end: float, cfg: SolverConfig) -> tuple[np.ndarray, float]:
    """Output time stamps (excluding t0) and the effective stride.

    The grid is uniform with the configured stride, coarsened by an integer
    factor if needed to respect ``max_samples``, and always ends exactly at
    ``t_end``.
    """
    if not t_end > t0:
        raise ConfigError(f"t_end ({t_end}) must exceed the initial time ({t0})")
    stride = cfg.stride
    n = int(np.floor((t_end - t0) / stride + 1e-9))
    if n + 2 > cfg.max_samples:
        # initial state plus a possible appended end point ride along
        factor = int(np.ceil(n / (cfg.max_samples - 2)))
        stride *= factor
        n = int(np.floor((t_end - t0) / stride + 1e-9))
    ts = t0 + stride * np.arange(1, n + 1)
    if ts.size == 0 or ts[-1] < t_end - 1e-9 * stride:
        ts = np.append(ts, t_end)
    else:
        ts[-1] = t_end
    return ts, stride


@njit(cache=False)
def _rk45_loop(rhs, y0, t0, rtol, atol, h0, hmax, sample_ts, out, pvec):
    """Dormand-Prince 5(4) with FSAL, clipping steps onto sample_ts."""
    n = y0.size
    y = y0.copy()
    k = np.empty((7, n))
    ytmp = np.empty(n)
    t = t0
    h = h0
    rhs(t, y, pvec, k[0])
    n_steps = 0
    n_rej = 0
    c2, c3, c4, c5 = 0.2, 0.3, 0.8, 8.0 / 9.0
    a21 = 0.2
    a31, a32 = 3.0 / 40.0, 9.0 / 40.0
    a41, a42, a43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
    a51, a52, a53, a54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
    a61, a62, a63, a64, a65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                               49.0 / 176.0, -5103.0 / 18656.0)
    b1, b3, b4, b5, b6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                          -2187.0 / 6784.0, 11.0 / 84.0)
    e1, e3, e4, e5, e6, e7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                              -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
    for s in range(sample_ts.size):
        target = sample_ts[s]
        while t < target:
            hs = h
            clipped = False
            if t + hs >= target:
                hs = target - t
                clipped = True
            for i in range(n):
                ytmp[i] = y[i] + hs * a21 * k[0, i]
            rhs(t + c2 * hs, ytmp, pvec, k[1])
            for i in range(n):
                ytmp[i] = y[i] + hs * (a31 * k[0, i] + a32 * k[1, i])
            rhs(t + c3 * hs, ytmp, pvec, k[2])
            for i in range(n):
                ytmp[i] = y[i] + hs * (a41 * k[0, i] + a42 * k[1, i] + a43 * k[2, i])
            rhs(t + c4 * hs, ytmp, pvec, k[3])
            for i in range(n):
                ytmp[i] = y[i] + hs * (a51 * k[0, i] + a52 * k[1, i]
                                       + a53 * k[2, i] + a54 * k[3, i])
            rhs(t + c5 * hs, ytmp, pvec, k[4])
            for i in range(n):
                ytmp[i] = y[i] + hs * (a61 * k[0, i] + a62 * k[1, i] + a63 * k[2, i]
                                       + a64 * k[3, i] + a65 * k[4, i])
            rhs(t + hs, ytmp, pvec, k[5])
            for i in range(n):
                ytmp[i] = y[i] + hs * (b1 * k[0, i] + b3 * k[2, i] + b4 * k[3, i]
                                       + b5 * k[4, i] + b6 * k[5, i])
            rhs(t + hs, ytmp, pvec, k[6])
            err_norm = 0.0
            for i in range(n):
                err_i = hs * (e1 * k[0, i] + e3 * k[2, i] + e4 * k[3, i]
                              + e5 * k[4, i] + e6 * k[5, i] + e7 * k[6, i])
                sc = atol + rtol * max(abs(y[i]), abs(ytmp[i]))
                err_norm += (err_i / sc) ** 2
            err_norm = np.sqrt(err_norm / n)
            if np.isfinite(err_norm) and err_norm <= 1.0:
                t = target if clipped else t + hs
                for i in range(n):
                    y[i] = ytmp[i]
                    k[0, i] = k[6, i]
                n_steps += 1
                if not np.isfinite(y[0]):
                    return _STATUS_NONFINITE, t, n_steps, n_rej
                fac = 5.0 if err_norm == 0.0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
                h = min(hs * fac, hmax)
            else:
                n_rej += 1
                shrink = 0.2 if not np.isfinite(err_norm) else max(0.2, 0.9 * err_norm ** -0.2)
                h = hs * shrink
                if h < 1e-14 * max(1.0, abs(t)):
                    return _STATUS_UNDERFLOW, t, n_steps, n_rej
        for i in range(n):
            out[s, i] = y[i]
        if not np.isfinite(out[s].sum()):
            return _STATUS_NONFINITE, t, n_steps, n_rej
    return _STATUS_OK, t, n_steps, n_rej


@njit(cache=False)
def _rk4_loop(rhs, y0, t0, h_max, sample_ts, out, pvec):
    """Classic RK4; each sample interval is sub-divided uniformly with
    sub-steps no longer than h_max."""
    n = y0.size
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    ytmp = np.empty(n)
    t = t0
    n_steps = 0
    for s in range(sample_ts.size):
        target = sample_ts[s]
        dt = target - t
        n_sub = max(1, int(np.ceil(dt / h_max - 1e-12)))
        hs = dt / n_sub
        for sub in range(n_sub):
            rhs(t, y, pvec, k1)
            for i in range(n):
                ytmp[i] = y[i] + 0.5 * hs * k1[i]
            rhs(t + 0.5 * hs, ytmp, pvec, k2)
            for i in range(n):
                ytmp[i] = y[i] + 0.5 * hs * k2[i]
            rhs(t + 0.5 * hs, ytmp, pvec, k3)
            for i in range(n):
                ytmp[i] = y[i] + hs * k3[i]
            rhs(t + hs, ytmp, pvec, k4)
            for i in range(n):
                y[i] += hs * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
            t = target if sub == n_sub - 1 else t + hs
            n_steps += 1
        for i in range(n):
            out[s, i] = y[i]
        if not np.isfinite(out[s].sum()):
            return _STATUS_NONFINITE, t, n_steps, 0
    return _STATUS_OK, t, n_steps, 0


def run_solver(rhs, y0: np.ndarray, t0: float, t_end: float,
               cfg: SolverConfig, pvec: np.ndarray):
    """Integrate ``rhs`` and return (sample_ts, samples, SolverStats).

    The returned samples exclude the initial state; callers prepend it so the
    stored series starts at t0.  Raises IntegrationError on blow-up or
    step-size underflow, tagged with the failure time.
    """
    ts, stride = sample_grid(t0, t_end, cfg)
    out = np.empty((ts.size, y0.size))
    if cfg.method == "rk45":
        status, t, n_steps, n_rej = _rk45_loop(
            rhs, np.asarray(y0, dtype=float), t0, cfg.rtol, cfg.atol,
            cfg.h0, cfg.hmax, ts, out, pvec)
    else:
        status, t, n_steps, n_rej = _rk4_loop(
            rhs, np.asarray(y0, dtype=float), t0, cfg.h, ts, out, pvec)
    if status == _STATUS_NONFINITE:
        raise IntegrationError(f"state became non-finite near t = {t:.6g}", t=t)
    if status == _STATUS_UNDERFLOW:
        raise IntegrationError(
            f"adaptive step size underflow at t = {t:.6g} "
            f"(rtol={cfg.rtol:g}, atol={cfg.atol:g})", t=t)
    stats = SolverStats(method=cfg.method, rtol=cfg.rtol, atol=cfg.atol,
                        h=cfg.h, stride=stride, n_steps=n_steps, n_rejected=n_rej)
    return ts, out, stats
