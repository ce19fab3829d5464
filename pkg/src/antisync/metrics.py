"""Phase extraction, locking detection, quantum phase-sum variance and the
synchronization measures built from rotated quadrature fluctuations.

Phases are phi_j = atan2(p_j, q_j), unwrapped; the instantaneous excitation
number n_j(t) = (q_j^2 + p_j^2)/2 is used as the squared amplitude, so that
q_j = sqrt(2 n_j) cos(phi_j) exactly on a circular orbit.  Locking statistics
use circular mean / standard deviation on the unit circle, so values near the
branch cut are handled without artifacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UndefinedVarianceError
from .meanfield import TrajectorySeries, write_table

METRICS_CSV_HEADER = ("t,phi_m,phi_d,sum,diff,sin_sum,sin_diff,"
                      "n_m,n_d,var_phase_sum,S_p,S_a")

_MODE_COLS = {"mechanical": ("q_m", "p_m"), "atomic": ("q_d", "p_d")}


@dataclass(frozen=True)
class PhaseSeries:
    """Unwrapped phase and excitation number of one mode.

    ``flagged`` marks samples where (q, p) = (0, 0) made the phase undefined
    and the previous value was carried forward.
    """

    t: np.ndarray
    phi: np.ndarray
    n: np.ndarray
    flagged: np.ndarray


def phase_series(series: TrajectorySeries, mode: str) -> PhaseSeries:
    """Instantaneous unwrapped phase and n(t) of the mechanical or atomic mode.

    Sampling must be dense enough that the true phase advances by less than
    pi between samples; unwrapping then reconstructs the continuous phase
    exactly.
    """
    try:
        qcol, pcol = _MODE_COLS[mode]
    except KeyError:
        raise ConfigError(f"mode must be 'mechanical' or 'atomic', got {mode!r}") from None
    q = series.component(qcol)
    p = series.component(pcol)
    n = 0.5 * (q * q + p * p)
    raw = np.arctan2(p, q)
    flagged = (q == 0.0) & (p == 0.0)
    if flagged.any():
        # carry the previous defined value; a leading undefined phase is 0
        idx = np.where(flagged, 0, np.arange(raw.size))
        np.maximum.accumulate(idx, out=idx)
        raw = np.where(flagged, raw[idx], raw)
        if flagged[0]:
            raw[0] = 0.0
    phi = np.unwrap(raw)
    return PhaseSeries(t=series.t.copy(), phi=phi, n=n, flagged=flagged)


@dataclass(frozen=True)
class PhaseRecord:
    """Joint phase record of both modes on a common time grid."""

    t: np.ndarray
    phi_m: np.ndarray
    phi_d: np.ndarray
    n_m: np.ndarray
    n_d: np.ndarray
    sum: np.ndarray
    diff: np.ndarray
    flagged_m: np.ndarray
    flagged_d: np.ndarray


def phase_record(series: TrajectorySeries) -> PhaseRecord:
    mech = phase_series(series, "mechanical")
    atom = phase_series(series, "atomic")
    return PhaseRecord(t=mech.t, phi_m=mech.phi, phi_d=atom.phi,
                       n_m=mech.n, n_d=atom.n,
                       sum=mech.phi + atom.phi, diff=mech.phi - atom.phi,
                       flagged_m=mech.flagged, flagged_d=atom.flagged)


def circular_mean_std(angles: np.ndarray) -> tuple[float, float]:
    """Circular mean in (-pi, pi] and the (Mardia) circular standard
    deviation sqrt(-2 ln R) of a sample of angles."""
    z = np.exp(1j * np.asarray(angles)).mean()
    R = abs(z)
    mean = math.atan2(z.imag, z.real)
    std = math.inf if R <= 0.0 else math.sqrt(max(0.0, -2.0 * math.log(min(R, 1.0))))
    return mean, std


@dataclass(frozen=True)
class LockingReport:
    locked: bool
    locked_value: float
    trailing_std: float
    window: float
    n_samples: int


def detect_locking(t: np.ndarray, phi_sum: np.ndarray, trailing_window: float,
                   threshold: float = 0.1) -> LockingReport:
    """Phase-sum locking verdict over the trailing window.

    Locked iff the circular standard deviation of the phase sum (mod 2 pi)
    stays below ``threshold``; the locked value is the circular mean mapped
    to (-pi, pi].
    """
    sel = t >= t[-1] - trailing_window
    n = int(np.count_nonzero(sel))
    if n < 100:
        raise ConfigError(f"locking window holds {n} samples; need >= 100")
    mean, std = circular_mean_std(phi_sum[sel])
    return LockingReport(locked=bool(std < threshold), locked_value=mean,
                         trailing_std=std, window=trailing_window, n_samples=n)


def _phase_weights(phi_m, phi_d, n_m, n_d, amplitude_floor):
    if not (n_m > amplitude_floor and n_d > amplitude_floor):
        raise UndefinedVarianceError(
            f"phase fluctuation undefined: n_m = {n_m:.3e}, n_d = {n_d:.3e} "
            f"(floor {amplitude_floor:.0e})")
    w = np.zeros(6)
    w[0] = -math.sin(phi_m) / math.sqrt(2.0 * n_m)
    w[1] = math.cos(phi_m) / math.sqrt(2.0 * n_m)
    w[2] = -math.sin(phi_d) / math.sqrt(2.0 * n_d)
    w[3] = math.cos(phi_d) / math.sqrt(2.0 * n_d)
    return w


def phase_sum_variance(V: np.ndarray, phi_m: float, phi_d: float,
                       n_m: float, n_d: float,
                       amplitude_floor: float = 1e-12) -> float:
    """Variance of the phase-sum fluctuation, <(d phi_m + d phi_d)^2>.

    Evaluates w^T V w with w the phase-fluctuation direction
    (-sin phi_j, cos phi_j)/sqrt(2 n_j) over the two oscillator blocks of the
    covariance matrix (cavity components do not enter).
    """
    w = _phase_weights(phi_m, phi_d, n_m, n_d, amplitude_floor)
    return float(w @ np.asarray(V, dtype=float) @ w)


def phase_sum_variance_series(Vs: np.ndarray, record: PhaseRecord,
                              amplitude_floor: float = 1e-12) -> np.ndarray:
    """Vectorised phase-sum variance along a covariance series.

    Samples where either amplitude is at or below the floor yield NaN rather
    than raising, so transients with a dormant mode stay inspectable.
    """
    ok = (record.n_m > amplitude_floor) & (record.n_d > amplitude_floor)
    w = np.zeros((record.t.size, 6))
    with np.errstate(divide="ignore", invalid="ignore"):
        rm = 1.0 / np.sqrt(2.0 * np.where(ok, record.n_m, 1.0))
        rd = 1.0 / np.sqrt(2.0 * np.where(ok, record.n_d, 1.0))
    w[:, 0] = -np.sin(record.phi_m) * rm
    w[:, 1] = np.cos(record.phi_m) * rm
    w[:, 2] = -np.sin(record.phi_d) * rd
    w[:, 3] = np.cos(record.phi_d) * rd
    out = np.einsum("ni,nij,nj->n", w, Vs, w)
    return np.where(ok, out, np.nan)


def sync_measures(V: np.ndarray, phi_m: float, phi_d: float) -> tuple[float, float]:
    """(S_p, S_a): inverse variances of the rotated momentum difference/sum.

    The rotated fluctuation dp'_j = -sin(phi_j) dq_j + cos(phi_j) dp_j is the
    anti-Hermitian quadrature of e^{-i phi_j} da_j; S_p = 1/(2 <(dp'_m -
    dp'_d)^2>) measures phase synchronization, S_a the same with the sum.
    A vanishing variance yields an inf sentinel (squeezing-unbounded regime).
    Both measures are stated for equal mode amplitudes; they remain computable
    for any state but their interpretation degrades when n_m != n_d.
    """
    V = np.asarray(V, dtype=float)
    sm, cm = math.sin(phi_m), math.cos(phi_m)
    sd, cd = math.sin(phi_d), math.cos(phi_d)
    w_diff = np.array([-sm, cm, sd, -cd, 0.0, 0.0])
    w_sum = np.array([-sm, cm, -sd, cd, 0.0, 0.0])
    var_diff = float(w_diff @ V @ w_diff)
    var_sum = float(w_sum @ V @ w_sum)
    s_p = math.inf if var_diff == 0.0 else 0.5 / var_diff
    s_a = math.inf if var_sum == 0.0 else 0.5 / var_sum
    return s_p, s_a


def sync_measures_series(Vs: np.ndarray, record: PhaseRecord) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised S_p, S_a along a covariance series."""
    w_diff = np.zeros((record.t.size, 6))
    w_sum = np.zeros((record.t.size, 6))
    sm, cm = np.sin(record.phi_m), np.cos(record.phi_m)
    sd, cd = np.sin(record.phi_d), np.cos(record.phi_d)
    w_diff[:, 0] = -sm
    w_diff[:, 1] = cm
    w_diff[:, 2] = sd
    w_diff[:, 3] = -cd
    w_sum[:, 0] = -sm
    w_sum[:, 1] = cm
    w_sum[:, 2] = -sd
    w_sum[:, 3] = cd
    var_diff = np.einsum("ni,nij,nj->n", w_diff, Vs, w_diff)
    var_sum = np.einsum("ni,nij,nj->n", w_sum, Vs, w_sum)
    with np.errstate(divide="ignore"):
        return 0.5 / var_diff, 0.5 / var_sum


@dataclass(frozen=True)
class SyncReport:
    """Summary of one run: locking verdict plus the quantum measures at the
    readout time (NaN when no covariance was propagated)."""

    locked: bool
    locked_value: float
    trailing_std: float
    variance_phase_sum: float = math.nan
    S_p: float = math.nan
    S_a: float = math.nan

    def as_dict(self) -> dict:
        return {"locked": self.locked, "locked_value": self.locked_value,
                "trailing_std": self.trailing_std,
                "variance_phase_sum": self.variance_phase_sum,
                "S_p": self.S_p, "S_a": self.S_a}


def metrics_to_csv(path_or_buf, record: PhaseRecord, var_phase_sum=None,
                   s_p=None, s_a=None) -> None:
    """Write the metrics table; covariance-derived columns default to NaN."""
    n = record.t.size
    nancol = np.full(n, np.nan)

    def col(x):
        return nancol if x is None else np.asarray(x, dtype=float)

    cols = [record.t, record.phi_m, record.phi_d, record.sum, record.diff,
            np.sin(record.sum), np.sin(record.diff), record.n_m, record.n_d,
            col(var_phase_sum), col(s_p), col(s_a)]
    write_table(path_or_buf, METRICS_CSV_HEADER, cols)
