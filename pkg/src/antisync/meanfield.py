"""Mean-field dynamics of the driven hybrid system and limit-cycle detection.

The six coupled equations (units of omega_m, canonical ordering
q_m, p_m, q_d, p_d, q_c, p_c):

    dq_m = p_m
    dp_m = -q_m - g_m (q_c^2 + p_c^2)/2 - gamma p_m
    dq_d = -omega_sigma p_d - Gamma_a q_d
    dp_d =  omega_sigma q_d - sqrt(2) g_d q_c - Gamma_a p_d
    dq_c = -kappa q_c + Delta p_c + g_m q_m p_c + sqrt(2) eta
    dp_c = -Delta q_c - g_m q_m q_c - sqrt(2) g_d q_d - kappa p_c

The only nonlinearity is the radiation-pressure product g_m * (cavity
intensity / mechanical position); with g_m = 0 the system is affine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError, ParameterError
from .model import IDX, SQRT2, MeanFieldState, SystemParams
from .solvers import SolverConfig, SolverStats, run_solver

CSV_HEADER = "t,q_c,p_c,q_m,p_m,q_d,p_d"
_CSV_COLS = ("q_c", "p_c", "q_m", "p_m", "q_d", "p_d")


@njit(cache=True)
def _mf_rhs(t, y, p, out):
    kappa = p[0]
    gamma = p[1]
    Gamma_a = p[2]
    Delta = p[3]
    omega_sigma = p[4]
    g_m = p[5]
    g_d = p[6]
    eta = p[7]
    q_m, p_m, q_d, p_d, q_c, p_c = y[0], y[1], y[2], y[3], y[4], y[5]
    out[0] = p_m
    out[1] = -q_m - 0.5 * g_m * (q_c * q_c + p_c * p_c) - gamma * p_m
    out[2] = -omega_sigma * p_d - Gamma_a * q_d
    out[3] = omega_sigma * q_d - SQRT2 * g_d * q_c - Gamma_a * p_d
    out[4] = -kappa * q_c + Delta * p_c + g_m * q_m * p_c + SQRT2 * eta
    out[5] = -Delta * q_c - g_m * q_m * q_c - SQRT2 * g_d * q_d - kappa * p_c


def rhs(state: MeanFieldState, params: SystemParams) -> np.ndarray:
    """Time derivative of the mean field, canonical ordering, units of omega_m."""
    out = np.empty(6)
    _mf_rhs(state.t, state.to_vector(), params.rate_vector(), out)
    if not np.all(np.isfinite(out)):
        raise ParameterError("mean-field derivative is non-finite (state blow-up?)")
    return out


@dataclass(frozen=True)
class TrajectorySeries:
    """Sampled mean-field trajectory.

    ``states`` has one row per time stamp, columns in the canonical ordering
    (q_m, p_m, q_d, p_d, q_c, p_c).  Time stamps are strictly increasing and
    every entry is finite.
    """

    t: np.ndarray
    states: np.ndarray
    stats: SolverStats

    def __post_init__(self):
        if self.t.ndim != 1 or self.states.shape != (self.t.size, 6):
            raise ParameterError("TrajectorySeries: shape mismatch between t and states")
        if self.t.size >= 2 and not np.all(np.diff(self.t) > 0):
            raise ParameterError("TrajectorySeries: time stamps must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ParameterError("TrajectorySeries: non-finite state encountered")

    def component(self, name: str) -> np.ndarray:
        return self.states[:, IDX[name]]

    @property
    def q_m(self):
        return self.states[:, IDX["q_m"]]

    @property
    def q_d(self):
        return self.states[:, IDX["q_d"]]

    def state_at(self, i: int) -> MeanFieldState:
        return MeanFieldState.from_vector(self.t[i], self.states[i])

    def to_csv(self, path_or_buf) -> None:
        """Write `t,q_c,p_c,q_m,p_m,q_d,p_d` rows at full precision."""
        cols = [self.t] + [self.component(c) for c in _CSV_COLS]
        write_table(path_or_buf, CSV_HEADER, cols)


def write_table(path_or_buf, header: str, columns) -> None:
    """Comma-separated table with %.17g floats (bit-stable for re-runs)."""
    data = np.column_stack(columns)
    if hasattr(path_or_buf, "write"):
        _write_rows(path_or_buf, header, data)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            _write_rows(fh, header, data)


def _write_rows(fh, header, data):
    fh.write(header + "\n")
    for row in data:
        fh.write(",".join("%.17g" % v for v in row) + "\n")


def integrate(params: SystemParams, initial: MeanFieldState, t_end: float,
              cfg: SolverConfig | None = None) -> TrajectorySeries:
    """Integrate the mean-field equations from ``initial`` up to ``t_end``.

    Deterministic for a fixed configuration.  The stored series starts with
    the initial state and is sampled at the configured stride.
    """
    if cfg is None:
        cfg = SolverConfig()
    ts, out, stats = run_solver(_mf_rhs, initial.to_vector(), initial.t, t_end,
                                cfg, params.rate_vector())
    t_full = np.concatenate([[initial.t], ts])
    states = np.vstack([initial.to_vector(), out])
    return TrajectorySeries(t=t_full, states=states, stats=stats)


@dataclass(frozen=True)
class LimitCycleReport:
    """Trailing-window convergence summary of the two oscillating modes.

    ``converged`` implies oscillation in both modes with per-period relative
    amplitude drift below the threshold.  ``relative_drift`` is NaN when a
    mode shows no zero crossing (not oscillating).
    """

    converged: bool
    oscillating: bool
    amplitude_m: float
    amplitude_d: float
    period_estimate: float
    relative_drift: float


def _upward_crossings(t, x):
    """Times where x crosses 0 upward, linearly interpolated."""
    s = np.signbit(x)
    idx = np.nonzero(s[:-1] & ~s[1:])[0]
    # exclude exact-zero plateaus at the right endpoint
    frac = x[idx] / (x[idx] - x[idx + 1])
    return t[idx] + frac * (t[idx + 1] - t[idx])


def _refined_peak(x: np.ndarray) -> float:
    """max|x| with parabolic refinement around the discrete maximum."""
    j = int(np.argmax(np.abs(x)))
    if j == 0 or j == x.size - 1:
        return abs(x[j])
    y0, y1, y2 = x[j - 1], x[j], x[j + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return abs(y1)
    delta = 0.5 * (y0 - y2) / denom
    return abs(y1 - 0.25 * (y0 - y2) * delta)


def _cycle_amplitudes(t, x, crossings):
    amps = []
    for a, b in zip(crossings[:-1], crossings[1:]):
        sel = (t >= a) & (t <= b)
        if np.count_nonzero(sel) >= 3:
            amps.append(_refined_peak(x[sel]))
    return np.array(amps)


def detect_limit_cycle(series: TrajectorySeries, trailing_window: float,
                       drift_threshold: float = 1e-3) -> LimitCycleReport:
    """Limit-cycle convergence report over the trailing window of a run.

    Amplitudes are per-cycle peaks of |q_m| and |q_d| (parabolically refined
    so sampling granularity does not alias into the drift estimate); the
    period comes from successive upward zero crossings of q_m.  A window
    without zero crossings yields a "not oscillating" verdict rather than an
    exception.
    """
    span = series.t[-1] - series.t[0]
    if span < 3.0 * trailing_window:
        raise ConfigError(
            f"series spans {span:.6g} time units; need >= 3 trailing windows "
            f"({3.0 * trailing_window:.6g})")
    sel = series.t >= series.t[-1] - trailing_window
    t = series.t[sel]
    drifts = []
    amplitudes = {}
    period = math.nan
    oscillating = True
    for name in ("q_m", "q_d"):
        x = series.component(name)[sel]
        crossings = _upward_crossings(t, x)
        if crossings.size < 3:
            oscillating = False
            amplitudes[name] = _refined_peak(x) if x.size else math.nan
            continue
        amplitudes[name] = _refined_peak(x)
        amps = _cycle_amplitudes(t, x, crossings)
        if amps.size >= 2:
            scale = np.mean(amps)
            drifts.append(np.max(np.abs(np.diff(amps))) / scale if scale > 0 else math.inf)
        if name == "q_m":
            period = float(np.mean(np.diff(crossings)))
    if not oscillating or not drifts:
        return LimitCycleReport(converged=False, oscillating=False,
                                amplitude_m=amplitudes.get("q_m", math.nan),
                                amplitude_d=amplitudes.get("q_d", math.nan),
                                period_estimate=period, relative_drift=math.nan)
    drift = float(max(drifts))
    return LimitCycleReport(converged=drift < drift_threshold, oscillating=True,
                            amplitude_m=float(amplitudes["q_m"]),
                            amplitude_d=float(amplitudes["q_d"]),
                            period_estimate=period, relative_drift=drift)
