"""Exception hierarchy shared across the package."""


class AntisyncError(Exception):
    """Base class for all package errors."""


class ParameterError(AntisyncError):
    """Invalid or inconsistent physical parameters."""


class ConfigError(AntisyncError):
    """Malformed configuration file or unknown/invalid keys."""


class IntegrationError(AntisyncError):
    """Numerical integration failed (blow-up or step-size underflow)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class PhysicalityError(AntisyncError):
    """Covariance matrix violated the uncertainty bound during propagation."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class UndefinedVarianceError(AntisyncError):
    """Phase-fluctuation variance requested at (near-)zero oscillation amplitude."""


class DegenerateCovarianceError(AntisyncError):
    """Symplectic invariants outside the numerically meaningful range."""


class OracleError(AntisyncError):
    """Monte Carlo / Lyapunov cross-validation mismatch or misuse."""
