"""Monte Carlo cross-check of the Lyapunov covariance propagation.

Samples the linearised fluctuation dynamics du = A(t) u dt + B dW directly
with Euler-Maruyama, B = sqrt(D) (the diagonal square root of the diffusion
matrix, which reproduces the symmetrised input-noise correlators by
construction), and compares sample covariances against the deterministic
propagation.  The quantum noises are sampled as classical Gaussian white
noise with the symmetrised strengths: this validates second moments (exactly
what the Lyapunov equation encodes), not full quantum statistics.

Each trajectory draws from its own counter-based Philox substream keyed by
(seed, trajectory index), and the moment accumulation runs in a fixed order,
so results are bit-identical for a given (seed, n_traj, step) regardless of
how the work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .covariance import diffusion_matrix
from .errors import OracleError, ParameterError
from .meanfield import TrajectorySeries
from .model import SQRT2, SystemParams

_TRIU = [(i, j) for i in range(6) for j in range(i, 6)]
ENSEMBLE_CSV_HEADER = ("t,"
                       + ",".join(f"V_{i}{j}" for i, j in _TRIU) + ","
                       + ",".join(f"SE_{i}{j}" for i, j in _TRIU))


@dataclass(frozen=True)
class EnsembleEstimate:
    """Sample covariance of the fluctuation ensemble at requested times.

    ``cov`` and ``stderr`` are (k, 6, 6); the sample covariance is symmetric
    by construction (outer products of samples).  ``n_failed`` counts
    trajectories dropped because they became non-finite.
    """

    times: np.ndarray
    cov: np.ndarray
    stderr: np.ndarray
    n_traj: int
    n_failed: int
    seed: int
    horizon: float
    step: float

    def __post_init__(self):
        if self.n_traj < 2:
            raise ParameterError("EnsembleEstimate needs at least 2 trajectories")
        if np.any(self.stderr < 0):
            raise ParameterError("EnsembleEstimate: negative standard error")

    def to_csv(self, path_or_buf) -> None:
        from .meanfield import write_table
        cols = [self.times]
        cols += [self.cov[:, i, j] for i, j in _TRIU]
        cols += [self.stderr[:, i, j] for i, j in _TRIU]
        write_table(path_or_buf, ENSEMBLE_CSV_HEADER, cols)


@njit(cache=True)
def _em_drift_loop(u, mf, p, h, noise, sample_idx, out):
    """Euler-Maruyama for du = A(t) u dt + noise, A(t) from the mean field.

    mf rows are (q_m, q_c, p_c) at the left endpoint of each step; noise is
    pre-scaled by sqrt(D)*sqrt(h).  Records u after step i when i+1 is in
    sample_idx.  Returns 0, or 1 if the trajectory became non-finite.
    """
    kappa = p[0]
    gamma = p[1]
    Gamma_a = p[2]
    Delta = p[3]
    omega_sigma = p[4]
    g_m = p[5]
    g_ac = p[8]
    n_steps = noise.shape[0]
    ns = 0
    for i in range(n_steps):
        q_m = mf[i, 0]
        q_c = mf[i, 1]
        p_c = mf[i, 2]
        det_eff = Delta + g_m * q_m
        u0, u1, u2, u3, u4, u5 = u[0], u[1], u[2], u[3], u[4], u[5]
        u[0] = u0 + h * u1 + noise[i, 0]
        u[1] = u1 + h * (-u0 - gamma * u1 - g_m * q_c * u4 - g_m * p_c * u5) + noise[i, 1]
        u[2] = u2 + h * (-Gamma_a * u2 - omega_sigma * u3) + noise[i, 2]
        u[3] = u3 + h * (omega_sigma * u2 - Gamma_a * u3 - SQRT2 * g_ac * u4) + noise[i, 3]
        u[4] = u4 + h * (g_m * p_c * u0 - kappa * u4 + det_eff * u5) + noise[i, 4]
        u[5] = u5 + h * (-g_m * q_c * u0 - SQRT2 * g_ac * u2 - det_eff * u4 - kappa * u5) + noise[i, 5]
        if ns < sample_idx.size and i + 1 == sample_idx[ns]:
            finite = True
            for j in range(6):
                out[ns, j] = u[j]
                finite = finite and np.isfinite(u[j])
            if not finite:
                return 1
            ns += 1
    return 0


@njit(cache=True)
def _em_const_loop(u, A, h, noise, sample_idx, out):
    """Euler-Maruyama with a constant drift matrix (diagnostic mode)."""
    n_steps = noise.shape[0]
    ns = 0
    du = np.empty(6)
    for i in range(n_steps):
        for r in range(6):
            acc = 0.0
            for c in range(6):
                acc += A[r, c] * u[c]
            du[r] = acc
        for r in range(6):
            u[r] += h * du[r] + noise[i, r]
        if ns < sample_idx.size and i + 1 == sample_idx[ns]:
            finite = True
            for j in range(6):
                out[ns, j] = u[j]
                finite = finite and np.isfinite(u[j])
            if not finite:
                return 1
            ns += 1
    return 0


def _psd_factor(V0: np.ndarray) -> np.ndarray:
    """Factor L with L L^T = V0 for any symmetric PSD V0 (eigh-based, so
    rank-deficient initial covariances are fine)."""
    w, U = np.linalg.eigh(0.5 * (V0 + V0.T))
    if np.min(w) < -1e-10 * max(1.0, np.max(np.abs(w))):
        raise ParameterError(f"V0 is not positive semidefinite (min eig {np.min(w):.3e})")
    return U * np.sqrt(np.clip(w, 0.0, None))[None, :]


def _max_drift_norm(params, mf_series, strict_paper, A_override) -> float:
    if A_override is not None:
        return float(np.max(np.sum(np.abs(A_override), axis=1)))
    qc = np.max(np.abs(mf_series.component("q_c")))
    pc = np.max(np.abs(mf_series.component("p_c")))
    qm = np.max(np.abs(mf_series.component("q_m")))
    g_ac = params.g_m if strict_paper else params.g_d
    rows = [
        1.0,
        1.0 + params.gamma + params.g_m * (qc + pc),
        params.Gamma_a + params.omega_sigma,
        params.omega_sigma + params.Gamma_a + SQRT2 * abs(g_ac),
        params.g_m * pc + params.kappa + abs(params.Delta) + params.g_m * qm,
        params.g_m * qc + SQRT2 * abs(g_ac) + abs(params.Delta) + params.g_m * qm + params.kappa,
    ]
    return float(max(rows))


def simulate_ensemble(params: SystemParams, mf_series: TrajectorySeries,
                      V0: np.ndarray, n_traj: int, step: float, seed: int,
                      sample_times=None, strict_paper: bool = False,
                      A_override=None, D_override=None) -> EnsembleEstimate:
    """Euler-Maruyama ensemble estimate of the fluctuation covariance.

    Parameters
    ----------
    mf_series : TrajectorySeries
        Mean field sampled on the uniform Euler grid (stride == step,
        starting at t = 0); ignored when ``A_override`` is given.
    V0 : (6, 6) PSD matrix
        Initial covariance; u(0) is drawn from N(0, V0).
    sample_times : sequence of floats
        Times at which to report (must lie on the step grid); defaults to
        the final time of the mean-field series.
    A_override, D_override : optional matrices
        Diagnostic mode: freeze the drift matrix and/or replace the
        diffusion matrix.

    Notes
    -----
    The Euler-Maruyama second-moment bias grows like horizon * step for the
    oscillatory modes here, so ``step`` should be chosen well below the
    targeted relative accuracy divided by the horizon (the default comparison
    at 1e4 trajectories resolves ~1.4%).
    """
    if n_traj < 100:
        raise ParameterError(f"n_traj must be >= 100, got {n_traj}")
    if not step > 0:
        raise ParameterError("step must be positive")
    if A_override is None:
        t = mf_series.t
        if abs(t[0]) > 1e-12:
            raise ParameterError("mean-field series must start at t = 0")
        strides = np.diff(t)
        if np.max(np.abs(strides - step)) > 1e-9 * step:
            raise ParameterError(
                "mean-field series must be sampled uniformly with stride == step")
        horizon = float(t[-1])
        mf_grid = np.column_stack([mf_series.component("q_m")[:-1],
                                   mf_series.component("q_c")[:-1],
                                   mf_series.component("p_c")[:-1]])
    else:
        A_override = np.asarray(A_override, dtype=float)
        if A_override.shape != (6, 6):
            raise ParameterError("A_override must be 6x6")
        if sample_times is None:
            raise ParameterError("A_override mode requires explicit sample_times")
        horizon = float(max(sample_times))
        mf_grid = None
    amax = _max_drift_norm(params, mf_series, strict_paper, A_override)
    if step * amax >= 0.1:
        raise ParameterError(
            f"step * max|A| = {step * amax:.3g} >= 0.1; reduce the step")
    if sample_times is None:
        sample_times = [horizon]
    sample_times = np.asarray(sorted(float(s) for s in sample_times))
    sample_idx = np.round(sample_times / step).astype(np.int64)
    if np.max(np.abs(sample_idx * step - sample_times)) > 1e-9 * max(step, 1.0):
        raise ParameterError("sample_times must lie on the step grid")
    if np.any(sample_idx < 1):
        raise ParameterError("sample_times must be >= one step")
    n_steps = int(sample_idx[-1])

    D = diffusion_matrix(params) if D_override is None else np.asarray(D_override, dtype=float)
    sq_d = np.sqrt(np.diag(D)) * np.sqrt(step)
    g_ac = params.g_m if strict_paper else params.g_d
    pvec = np.concatenate([params.rate_vector(), [g_ac]])
    L = _psd_factor(np.asarray(V0, dtype=float))

    k = sample_idx.size
    sum1 = np.zeros((k, 6, 6))
    sum2 = np.zeros((k, 6, 6))
    samples = np.empty((k, 6))
    zbuf = np.empty((n_steps + 1, 6))
    n_failed = 0
    for traj in range(n_traj):
        gen = np.random.Generator(
            np.random.Philox(key=np.array([seed, traj], dtype=np.uint64)))
        gen.standard_normal(out=zbuf)
        u = L @ zbuf[0]
        noise = zbuf[1:]
        noise *= sq_d[None, :]
        if A_override is None:
            bad = _em_drift_loop(u, mf_grid, pvec, step, noise, sample_idx, samples)
        else:
            bad = _em_const_loop(u, A_override, step, noise, sample_idx, samples)
        if bad:
            n_failed += 1
            continue
        prods = samples[:, :, None] * samples[:, None, :]
        sum1 += prods
        sum2 += prods * prods
    n_ok = n_traj - n_failed
    if n_ok < 2:
        raise OracleError(f"only {n_ok} finite trajectories out of {n_traj}")
    cov = sum1 / n_ok
    var = np.maximum(sum2 / n_ok - cov ** 2, 0.0)
    stderr = np.sqrt(var / n_ok)
    return EnsembleEstimate(times=sample_times, cov=cov, stderr=stderr,
                            n_traj=n_ok, n_failed=n_failed, seed=seed,
                            horizon=horizon, step=step)


def compare(V_lyap: np.ndarray, est: EnsembleEstimate,
            times=None, stderr_floor: float = 1e-15,
            absolute_tol: float = 1e-12) -> float:
    """Maximum |z| = |V_lyap - V_mc| / stderr over all entries and times.

    ``V_lyap`` is (6, 6) for a single-time estimate or (k, 6, 6) matching
    ``est.times``; if ``times`` is given it must match est.times exactly.
    Entries whose standard error is below ``stderr_floor`` are compared
    absolutely: they contribute 0 when within ``absolute_tol`` and inf
    otherwise.
    """
    V_lyap = np.asarray(V_lyap, dtype=float)
    if V_lyap.ndim == 2:
        V_lyap = V_lyap[None]
    if V_lyap.shape != est.cov.shape:
        raise OracleError(
            f"shape mismatch: V_lyap {V_lyap.shape} vs estimate {est.cov.shape}")
    if times is not None:
        times = np.asarray(times, dtype=float)
        if times.shape != est.times.shape or np.max(np.abs(times - est.times)) > 1e-9:
            raise OracleError("time stamps of the two routes do not match")
    diff = np.abs(V_lyap - est.cov)
    z = np.where(est.stderr > stderr_floor,
                 diff / np.where(est.stderr > stderr_floor, est.stderr, 1.0),
                 np.where(diff <= absolute_tol, 0.0, np.inf))
    return float(np.max(z))
