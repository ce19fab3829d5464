"""Simulation toolkit for phase anti-synchronization in a driven hybrid
optomechanical system (mechanical oscillator + bosonized atomic ensemble).

Core pieces: mean-field limit-cycle dynamics, Lyapunov propagation of the
quantum-fluctuation covariance, a Monte Carlo cross-check of that
propagation, phase/synchronization metrics and the Gaussian quantum discord
of the mechanical-atomic state.
"""

from .covariance import (CovarianceSeries, check_physicality, diffusion_matrix,
                         drift_matrix, initial_covariance, propagate_joint,
                         symplectic_form)
from .discord import CovMatrix4, gaussian_discord, reduce, rescale_to_unit_vacuum, \
    symplectic_eigenvalues
from .errors import (AntisyncError, ConfigError, DegenerateCovarianceError,
                     IntegrationError, OracleError, ParameterError,
                     PhysicalityError, UndefinedVarianceError)
from .meanfield import (LimitCycleReport, TrajectorySeries, detect_limit_cycle,
                        integrate, rhs)
from .metrics import (LockingReport, PhaseRecord, SyncReport, detect_locking,
                      phase_record, phase_series, phase_sum_variance,
                      sync_measures)
from .model import (MeanFieldState, OccupancyConvention, SystemParams, energy,
                    thermal_occupancy, validate)
from .montecarlo import EnsembleEstimate, compare, simulate_ensemble
from .solvers import SolverConfig

__version__ = "0.1.0"
