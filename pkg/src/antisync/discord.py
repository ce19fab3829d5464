"""Gaussian quantum discord of the mechanical-atomic two-mode state.

Works on the 4x4 covariance matrix over (dq_m, dp_m, dq_d, dp_d) in the
2x2-block form

    V = [[V_A, V_C], [V_C^T, V_B]],

with invariants alpha = det V_A, beta = det V_B, gamma = det V_C and
delta = det V.  The dynamics convention of this package has vacuum variance
1/2 per quadrature, while the discord entropy function f(x) requires
symplectic eigenvalues >= 1 (unit-vacuum convention); covariance matrices are
therefore rescaled by 2 before any discord formula is evaluated, and the
convention is tracked explicitly to rule out double rescaling.

The measured-mode entropy correction f(sqrt(eps)) enters the discord with a
plus sign; the sign is fixed by the requirement that product states carry
exactly zero discord (verified by the test suite).  A ``strict_paper_sign``
switch evaluates the expression with a minus sign instead for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCovarianceError, ParameterError

HALF_VACUUM = "half_vacuum"
UNIT_VACUUM = "unit_vacuum"

_OMEGA4 = np.array([[0.0, 1.0, 0.0, 0.0],
                    [-1.0, 0.0, 0.0, 0.0],
                    [0.0, 0.0, 0.0, 1.0],
                    [0.0, 0.0, -1.0, 0.0]])


@dataclass(frozen=True)
class CovMatrix4:
    """Two-mode covariance matrix with its vacuum-variance convention tag."""

    matrix: np.ndarray
    convention: str

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise ParameterError("CovMatrix4 must be 4x4")
        if np.max(np.abs(m - m.T)) > 1e-9 * max(1.0, np.max(np.abs(m))):
            raise ParameterError("CovMatrix4 must be symmetric")
        if self.convention not in (HALF_VACUUM, UNIT_VACUUM):
            raise ParameterError(f"unknown convention {self.convention!r}")
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))


def reduce(V6: np.ndarray) -> CovMatrix4:
    """Mechanical+atomic block (rows/columns 0..3) of a 6x6 covariance in
    the dynamics (half-vacuum) convention."""
    V6 = np.asarray(V6, dtype=float)
    if V6.shape != (6, 6):
        raise ParameterError("reduce expects a 6x6 covariance matrix")
    return CovMatrix4(matrix=V6[:4, :4].copy(), convention=HALF_VACUUM)


def rescale_to_unit_vacuum(cm: CovMatrix4) -> CovMatrix4:
    """Double the covariance so the vacuum variance becomes 1."""
    if cm.convention == UNIT_VACUUM:
        raise ParameterError("covariance is already in the unit-vacuum convention")
    return CovMatrix4(matrix=2.0 * cm.matrix, convention=UNIT_VACUUM)


def _as_unit_vacuum(V) -> np.ndarray:
    if isinstance(V, CovMatrix4):
        if V.convention == HALF_VACUUM:
            V = rescale_to_unit_vacuum(V)
        return V.matrix
    return CovMatrix4(matrix=np.asarray(V, dtype=float), convention=UNIT_VACUUM).matrix


def _block_determinants(V: np.ndarray):
    alpha = float(np.linalg.det(V[:2, :2]))
    beta = float(np.linalg.det(V[2:, 2:]))
    gamma = float(np.linalg.det(V[:2, 2:]))
    delta = float(np.linalg.det(V))
    return alpha, beta, gamma, delta


def _guarded_sqrt(x: float, what: str, band: float = 1e-12) -> float:
    if x < -band:
        raise DegenerateCovarianceError(f"negative radicand in {what}: {x:.3e}")
    return math.sqrt(max(x, 0.0))


def symplectic_eigenvalues(V) -> tuple[float, float]:
    """(nu_plus, nu_minus) of a unit-vacuum two-mode covariance matrix.

    nu_pm = sqrt((Sigma_+ pm sqrt(Sigma_+^2 - 4 det V))/2) with
    Sigma_+ = det V_A + det V_B + 2 det V_C.  Radicands within -1e-12 of zero
    are clamped; anything more negative raises DegenerateCovarianceError.
    """
    Vu = _as_unit_vacuum(V)
    alpha, beta, gamma, delta = _block_determinants(Vu)
    sigma = alpha + beta + 2.0 * gamma
    root = _guarded_sqrt(sigma * sigma - 4.0 * delta, "Sigma_+^2 - 4 det V")
    nu_plus = _guarded_sqrt(0.5 * (sigma + root), "nu_+^2")
    nu_minus = _guarded_sqrt(0.5 * (sigma - root), "nu_-^2")
    return nu_plus, nu_minus


def symplectic_eigenvalues_direct(V) -> tuple[float, float]:
    """Independent route: moduli of the eigenvalues of i Omega V."""
    Vu = _as_unit_vacuum(V)
    eigs = np.abs(np.linalg.eigvals(1j * _OMEGA4 @ Vu))
    eigs.sort()
    # eigenvalues come in pairs (nu, nu)
    return float(eigs[-1]), float(eigs[0])


def entropy_f(x: float, base: float = 2.0) -> float:
    """f(x) = ((x+1)/2) log((x+1)/2) - ((x-1)/2) log((x-1)/2), f(1) = 0.

    Defined on [1, inf).  Inputs within 1e-6 below 1 are treated as 1: the
    symplectic-eigenvalue closed form loses half its digits near the vacuum
    boundary (a square root amplifies the Sigma_+^2 - 4 det V cancellation),
    so pure states legitimately land at 1 - O(1e-8).
    """
    if x < 1.0:
        if x < 1.0 - 1e-6:
            raise DegenerateCovarianceError(f"entropy argument below 1: {x!r}")
        return 0.0
    if x == 1.0:
        return 0.0
    lb = math.log(base)
    a = 0.5 * (x + 1.0)
    b = 0.5 * (x - 1.0)
    return (a * math.log(a) - b * math.log(b)) / lb


def _conditional_epsilon(alpha, beta, gamma, delta):
    """Minimised conditional-state determinant (two-branch closed form)."""
    g2 = gamma * gamma
    if abs(beta - 1.0) > 1e-12:
        denom_test = (beta + 1.0) * g2 * (alpha + delta)
        if denom_test != 0.0:
            ratio = (delta - alpha * beta) ** 2 / denom_test
            if ratio <= 1.0:
                inner = _guarded_sqrt(g2 + (beta - 1.0) * (delta - alpha),
                                      "first conditional branch")
                return ((2.0 * g2 + (beta - 1.0) * (delta - alpha)
                         + 2.0 * abs(gamma) * inner) / (beta - 1.0) ** 2)
    inner = _guarded_sqrt(g2 * g2 + (delta - alpha * beta) ** 2
                          - 2.0 * g2 * (delta + alpha * beta),
                          "second conditional branch")
    return (alpha * beta - g2 + delta - inner) / (2.0 * beta)


def gaussian_discord(V, base: float = 2.0, strict_paper_sign: bool = False) -> float:
    """Gaussian quantum discord of the mechanical-atomic state.

    Accepts a CovMatrix4 in either convention (half-vacuum inputs are
    rescaled internally) or a bare 4x4 array assumed unit-vacuum.  Uncorrelated
    blocks (det V_C = 0) short-circuit to exactly 0.  Values in (-1e-10, 0)
    arising from rounding are clamped to 0.

    Parameters
    ----------
    base : logarithm base of the entropy function (2 -> bits, e -> nats).
    strict_paper_sign : evaluate with -f(sqrt(eps)) instead of +f(sqrt(eps)).
    """
    Vu = _as_unit_vacuum(V)
    alpha, beta, gamma, delta = _block_determinants(Vu)
    if gamma == 0.0:
        return 0.0
    nu_plus, nu_minus = symplectic_eigenvalues(Vu)
    eps = _conditional_epsilon(alpha, beta, gamma, delta)
    sign = -1.0 if strict_paper_sign else 1.0
    d = (entropy_f(_guarded_sqrt(beta, "sqrt(beta)"), base)
         - entropy_f(nu_minus, base) - entropy_f(nu_plus, base)
         + sign * entropy_f(_guarded_sqrt(eps, "sqrt(eps)"), base))
    if -1e-10 < d < 0.0:
        return 0.0
    return d


def discord_from_v6(V6: np.ndarray, base: float = 2.0) -> float:
    """Convenience: discord of the mechanical-atomic block of a 6x6
    dynamics-convention covariance matrix."""
    return gaussian_discord(reduce(V6), base=base)
