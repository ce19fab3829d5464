"""Shared helpers: synthetic trajectory construction and closed forms for the
decoupled linear system."""

import numpy as np
import pytest

from antisync.meanfield import TrajectorySeries
from antisync.model import IDX
from antisync.solvers import SolverStats


def make_series(t, **columns) -> TrajectorySeries:
    """TrajectorySeries from named component arrays (missing ones are zero)."""
    t = np.asarray(t, dtype=float)
    states = np.zeros((t.size, 6))
    for name, values in columns.items():
        states[:, IDX[name]] = values
    stats = SolverStats(method="synthetic", rtol=0.0, atol=0.0, h=0.0,
                        stride=float(t[1] - t[0]) if t.size > 1 else 0.0,
                        n_steps=0, n_rejected=0)
    return TrajectorySeries(t=t, states=states, stats=stats)


def linear_decoupled_solution(t, y0, params):
    """Exact solution of the g_m = g_d = eta = 0 system.

    Each mode evolves independently:
      cavity      z_c = (q_c + i p_c): dz = -(kappa + i Delta) z
      mechanical  z_m = (q_m + i p_m): dz = -i z - (gamma/2)(z - conj(z))*...
    The mechanical damping acts on p_m only, so it is handled as a 2x2
    matrix exponential; cavity and atomic blocks are complex exponentials.
    """
    from scipy.linalg import expm

    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((t.size, 6))
    blocks = {
        "mech": (slice(0, 2), np.array([[0.0, 1.0], [-1.0, -params.gamma]])),
        "atom": (slice(2, 4), np.array([[-params.Gamma_a, -params.omega_sigma],
                                        [params.omega_sigma, -params.Gamma_a]])),
        "cav": (slice(4, 6), np.array([[-params.kappa, params.Delta],
                                       [-params.Delta, -params.kappa]])),
    }
    for sl, A in blocks.values():
        for i, ti in enumerate(t):
            out[i, sl] = expm(A * ti) @ y0[sl]
    return out[0] if np.isscalar(t) else out


@pytest.fixture(scope="session")
def baseline_short_series():
    """Baseline run to t = 2e4, shared by several tests."""
    from antisync.meanfield import integrate
    from antisync.model import MeanFieldState, SystemParams
    from antisync.solvers import SolverConfig

    return integrate(SystemParams(), MeanFieldState(t=0.0), 2e4,
                     SolverConfig(stride=0.2))
