"""Drift/diffusion matrices and Lyapunov propagation of the 6x6 covariance
matrix of the quantum fluctuations.

Fluctuation ordering u = (dq_m, dp_m, dq_d, dp_d, dq_c, dp_c).  The second
moments V(t) obey dV/dt = A(t) V + V A(t)^T + D with A the linearisation of
the dynamics around the instantaneous mean field and D the (diagonal)
diffusion matrix of the input noises.  The covariance is co-integrated with
the mean field as one 42-dimensional system so that A(t) is always evaluated
at the solver's own mean-field state.

The linearised atom-cavity rows carry the atom-cavity coupling g_d; a strict
transcription mode that puts g_m in those two entries instead is available
behind ``strict_paper=True`` (the two choices coincide whenever g_m = g_d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ParameterError, PhysicalityError
from .meanfield import TrajectorySeries, write_table, _mf_rhs
from .model import SQRT2, MeanFieldState, SystemParams
from .solvers import SolverConfig, SolverStats, run_solver


def symplectic_form() -> np.ndarray:
    """Block-diagonal symplectic form: three 2x2 blocks [[0,1],[-1,0]]."""
    omega = np.zeros((6, 6))
    for m in range(3):
        omega[2 * m, 2 * m + 1] = 1.0
        omega[2 * m + 1, 2 * m] = -1.0
    return omega


OMEGA = symplectic_form()
OMEGA.setflags(write=False)

_COV_LABELS = ("qm", "pm", "qd", "pd", "qc", "pc")
_TRIU = [(i, j) for i in range(6) for j in range(i, 6)]
COV_CSV_HEADER = "t," + ",".join(f"V_{_COV_LABELS[i]}_{_COV_LABELS[j]}" for i, j in _TRIU)


def drift_matrix(state: MeanFieldState, params: SystemParams,
                 strict_paper: bool = False) -> np.ndarray:
    """Linearised generator A at the given mean-field state (units of omega_m).

    Equals the Jacobian of the mean-field right-hand side; with
    ``strict_paper`` the two atom-cavity entries use g_m instead of g_d.
    """
    g_ac = params.g_m if strict_paper else params.g_d
    q_m, q_c, p_c = state.q_m, state.q_c, state.p_c
    det_eff = params.Delta + params.g_m * q_m
    A = np.zeros((6, 6))
    A[0, 1] = 1.0
    A[1, 0] = -1.0
    A[1, 1] = -params.gamma
    A[1, 4] = -params.g_m * q_c
    A[1, 5] = -params.g_m * p_c
    A[2, 2] = -params.Gamma_a
    A[2, 3] = -params.omega_sigma
    A[3, 2] = params.omega_sigma
    A[3, 3] = -params.Gamma_a
    A[3, 4] = -SQRT2 * g_ac
    A[4, 0] = params.g_m * p_c
    A[4, 4] = -params.kappa
    A[4, 5] = det_eff
    A[5, 0] = -params.g_m * q_c
    A[5, 2] = -SQRT2 * g_ac
    A[5, 4] = -det_eff
    A[5, 5] = -params.kappa
    return A


def diffusion_matrix(params: SystemParams) -> np.ndarray:
    """Diagonal diffusion matrix diag(0, gamma(2 n_bar + 1), Gamma, Gamma,
    kappa, kappa), units of omega_m."""
    return np.diag([0.0,
                    params.gamma * (2.0 * params.n_bar + 1.0),
                    params.Gamma_a, params.Gamma_a,
                    params.kappa, params.kappa])


def initial_covariance(n_bar: float) -> np.ndarray:
    """Mechanical mode thermal at occupancy n_bar, atoms and cavity in vacuum:
    diag(n_bar + 1/2, n_bar + 1/2, 1/2, 1/2, 1/2, 1/2)."""
    if not (n_bar >= 0 and math.isfinite(n_bar)):
        raise ParameterError(f"initial_covariance: n_bar must be finite and >= 0, got {n_bar}")
    return np.diag([n_bar + 0.5, n_bar + 0.5, 0.5, 0.5, 0.5, 0.5])


@njit(cache=True)
def _joint_rhs(t, y, p, out):
    """Mean field (first 6) plus dV = A V + (A V)^T + D (remaining 36).

    V is read symmetrised, which makes the stage derivatives exactly
    symmetric: rounding-level asymmetry can never compound across steps.
    pvec layout: rates[0:8], g_ac at [8], diag(D) at [9:15].
    """
    _mf_rhs(t, y[:6], p, out[:6])
    kappa = p[0]
    gamma = p[1]
    Gamma_a = p[2]
    Delta = p[3]
    omega_sigma = p[4]
    g_m = p[5]
    g_ac = p[8]
    q_m, q_c, p_c = y[0], y[4], y[5]
    det_eff = Delta + g_m * q_m
    A = np.zeros((6, 6))
    A[0, 1] = 1.0
    A[1, 0] = -1.0
    A[1, 1] = -gamma
    A[1, 4] = -g_m * q_c
    A[1, 5] = -g_m * p_c
    A[2, 2] = -Gamma_a
    A[2, 3] = -omega_sigma
    A[3, 2] = omega_sigma
    A[3, 3] = -Gamma_a
    A[3, 4] = -SQRT2 * g_ac
    A[4, 0] = g_m * p_c
    A[4, 4] = -kappa
    A[4, 5] = det_eff
    A[5, 0] = -g_m * q_c
    A[5, 2] = -SQRT2 * g_ac
    A[5, 4] = -det_eff
    A[5, 5] = -kappa
    M = np.empty((6, 6))
    for i in range(6):
        for j in range(6):
            acc = 0.0
            for k in range(6):
                acc += A[i, k] * 0.5 * (y[6 + 6 * k + j] + y[6 + 6 * j + k])
            M[i, j] = acc
    for i in range(6):
        for j in range(6):
            out[6 + 6 * i + j] = M[i, j] + M[j, i]
    for i in range(1, 6):
        out[6 + 7 * i] += p[9 + i]
    out[6] += p[9]


def _joint_pvec(params: SystemParams, strict_paper: bool, D_override) -> np.ndarray:
    g_ac = params.g_m if strict_paper else params.g_d
    D = diffusion_matrix(params) if D_override is None else np.asarray(D_override, dtype=float)
    if D.shape != (6, 6) or np.any(D != np.diag(np.diag(D))):
        raise ParameterError("D_override must be a diagonal 6x6 matrix")
    return np.concatenate([params.rate_vector(), [g_ac], np.diag(D)])


@dataclass(frozen=True)
class CovarianceSeries:
    """Sampled covariance matrices V(t), exactly symmetric at every sample."""

    t: np.ndarray
    V: np.ndarray  # (n, 6, 6)
    stats: SolverStats

    def __post_init__(self):
        if self.V.shape != (self.t.size, 6, 6):
            raise ParameterError("CovarianceSeries: shape mismatch between t and V")

    def to_csv(self, path_or_buf) -> None:
        """Rows ``t`` plus the 21 upper-triangle entries in row-major order."""
        cols = [self.t] + [self.V[:, i, j] for i, j in _TRIU]
        write_table(path_or_buf, COV_CSV_HEADER, cols)


@dataclass(frozen=True)
class PhysicalityReport:
    """Invariant check of one covariance matrix: symmetry defect max|V - V^T|
    and the smallest eigenvalue of the Hermitian matrix V + i/2 Omega."""

    symmetric_defect: float
    min_uncertainty_eigenvalue: float


def check_physicality(V: np.ndarray) -> PhysicalityReport:
    V = np.asarray(V, dtype=float)
    defect = float(np.max(np.abs(V - V.T)))
    H = V + 0.5j * OMEGA
    min_eig = float(np.linalg.eigvalsh(H)[0])
    return PhysicalityReport(symmetric_defect=defect, min_uncertainty_eigenvalue=min_eig)


def min_uncertainty_eigenvalues(Vs: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of V + i/2 Omega for a (n, 6, 6) stack."""
    H = np.asarray(Vs) + 0.5j * OMEGA[None, :, :]
    return np.linalg.eigvalsh(H)[:, 0]


def physicality_margin(Vs: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """Scale-robust certificate for min eig(V + i/2 Omega) >= -shift.

    Positive semidefiniteness of H = V + i/2 Omega + shift*I is invariant
    under the diagonal congruence H -> S H S with S = diag(1/sqrt(1+V_ii))
    (Sylvester's law of inertia), and the scaled matrix has O(1) entries, so
    its smallest eigenvalue is computed to machine precision regardless of
    how large V has grown.  Entries >= 0 (up to O(1e-14) rounding) certify
    the bound; genuinely negative entries disprove it.
    """
    Vs = np.asarray(Vs, dtype=float)
    single = Vs.ndim == 2
    if single:
        Vs = Vs[None]
    H = Vs + 0.5j * OMEGA[None, :, :] + shift * np.eye(6)[None, :, :]
    d = 1.0 / np.sqrt(1.0 + Vs[:, range(6), range(6)])
    G = H * d[:, :, None] * d[:, None, :]
    m = np.linalg.eigvalsh(G)[:, 0]
    return m[0] if single else m


def propagate_joint(params: SystemParams, mf_initial: MeanFieldState,
                    V0: np.ndarray, t_end: float, cfg: SolverConfig | None = None,
                    strict_paper: bool = False, D_override=None,
                    physicality_rtol: float = 1e-10,
                    enforce_physicality: bool = True,
                    ) -> tuple[TrajectorySeries, CovarianceSeries]:
    """Co-integrate mean field and covariance up to ``t_end``.

    V0 must be symmetric.  Every stored sample is checked for physicality
    with a scale-aware tolerance: the run aborts (reporting the offending
    time) if min eig(V + i/2 Omega) < -max(1e-8, physicality_rtol * (1 +
    max|V|)).  The relative term reflects that a covariance of magnitude
    ||V|| cannot be represented in float64 to better than eps*||V||.
    Diagnostic runs with deliberately unphysical inputs (e.g. V0 = 0) can
    switch the check off via ``enforce_physicality=False``.
    """
    if cfg is None:
        cfg = SolverConfig(rtol=1e-10, atol=1e-12, stride=1.0)
    V0 = np.asarray(V0, dtype=float)
    if V0.shape != (6, 6):
        raise ParameterError("V0 must be 6x6")
    if np.max(np.abs(V0 - V0.T)) > 1e-12 * max(1.0, np.max(np.abs(V0))):
        raise ParameterError("V0 must be symmetric")
    if enforce_physicality:
        rep = check_physicality(V0)
        if rep.min_uncertainty_eigenvalue < -1e-8:
            raise PhysicalityError(
                f"V0 violates the uncertainty bound "
                f"(min eig = {rep.min_uncertainty_eigenvalue:.3e})", t=mf_initial.t)
    pvec = _joint_pvec(params, strict_paper, D_override)
    y0 = np.concatenate([mf_initial.to_vector(), 0.5 * (V0 + V0.T).ravel()])
    ts, out, stats = run_solver(_joint_rhs, y0, mf_initial.t, t_end, cfg, pvec)
    t_full = np.concatenate([[mf_initial.t], ts])
    states = np.vstack([mf_initial.to_vector(), out[:, :6]])
    Vs = np.concatenate([V0[None], out[:, 6:].reshape(-1, 6, 6)])
    Vs = 0.5 * (Vs + np.transpose(Vs, (0, 2, 1)))
    traj = TrajectorySeries(t=t_full, states=states, stats=stats)
    cov = CovarianceSeries(t=t_full, V=Vs, stats=stats)
    if enforce_physicality:
        _abort_if_unphysical(cov, physicality_rtol)
    return traj, cov


def _abort_if_unphysical(cov: CovarianceSeries, physicality_rtol: float) -> None:
    scale = 1.0 + np.abs(cov.V).max(axis=(1, 2))
    tol = np.maximum(1e-8, physicality_rtol * scale)
    min_eigs = min_uncertainty_eigenvalues(cov.V)
    bad = np.nonzero(min_eigs < -tol)[0]
    if bad.size:
        i = bad[0]
        raise PhysicalityError(
            f"covariance violated the uncertainty bound at t = {cov.t[i]:.6g} "
            f"(min eig = {min_eigs[i]:.3e}, tolerance = {-tol[i]:.3e})",
            t=float(cov.t[i]))
