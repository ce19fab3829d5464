"""Physical parameters, quadrature conventions and derived quantities.

All rates and couplings are stored as dimensionless ratios to the mechanical
angular frequency ``omega_m``; time is measured in units of 1/omega_m.  The
quadratures follow q = (a^dag + a)/sqrt(2), p = i(a^dag - a)/sqrt(2) for every
mode, so the vacuum variance of each quadrature is 1/2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ParameterError

HBAR = 1.054571817e-34  # J s (CODATA 2018)
K_B = 1.380649e-23      # J / K (exact)
SQRT2 = math.sqrt(2.0)

# Canonical component ordering used by every array-valued state/covariance in
# the package: mechanical pair, atomic pair, cavity pair.
STATE_ORDER = ("q_m", "p_m", "q_d", "p_d", "q_c", "p_c")
IDX = {name: i for i, name in enumerate(STATE_ORDER)}


class OccupancyConvention(enum.Enum):
    """How the thermal phonon number is derived from (omega_m, T).

    BOSE_EINSTEIN is the physical Bose-Einstein occupancy.  PAPER_LITERAL is
    the plain Boltzmann factor exp(-hbar*omega/kT); it is retained so that
    runs with either reading of the occupancy formula can be reproduced.
    """

    BOSE_EINSTEIN = "bose_einstein"
    PAPER_LITERAL = "paper_literal"


def thermal_occupancy(omega_m: float, temperature: float,
                      convention: OccupancyConvention = OccupancyConvention.BOSE_EINSTEIN) -> float:
    """Thermal phonon occupancy of the mechanical bath.

    Parameters
    ----------
    omega_m : float
        Mechanical angular frequency in rad/s (absolute scale, > 0).
    temperature : float
        Bath temperature in kelvin (>= 0).
    convention : OccupancyConvention
        BOSE_EINSTEIN: 1/(exp(hbar w/kT) - 1).  PAPER_LITERAL: exp(-hbar w/kT).

    Returns
    -------
    float
        Dimensionless occupancy; exactly 0 at T = 0 for both conventions.
    """
    if not (math.isfinite(omega_m) and math.isfinite(temperature)):
        raise ParameterError("thermal_occupancy: omega_m and temperature must be finite")
    if omega_m <= 0:
        raise ParameterError(f"thermal_occupancy: omega_m must be > 0, got {omega_m}")
    if temperature < 0:
        raise ParameterError(f"thermal_occupancy: temperature must be >= 0, got {temperature}")
    if temperature == 0.0:
        return 0.0
    x = HBAR * omega_m / (K_B * temperature)
    if convention is OccupancyConvention.BOSE_EINSTEIN:
        return 1.0 / math.expm1(x)
    if convention is OccupancyConvention.PAPER_LITERAL:
        return math.exp(-x)
    raise ParameterError(f"unknown occupancy convention {convention!r}")


@dataclass(frozen=True)
class SystemParams:
    """All physical rates of the hybrid system, in units of omega_m.

    ``omega_m`` itself is the only dimensionful field (rad/s); it enters the
    dynamics only through the derived thermal occupancy ``n_bar``.  Defaults
    are the baseline operating point used throughout the test suite.
    """

    omega_m: float = 1.0e7          # rad/s
    kappa: float = 1.0              # cavity decay / omega_m
    gamma: float = 5.0e-6           # mechanical damping / omega_m
    Gamma_a: float = 5.0e-6         # atomic dephasing / omega_m
    Delta: float = -1.0             # cavity-laser detuning / omega_m
    omega_sigma: float = 1.0        # atomic splitting / omega_m
    g_m: float = 1.0e-5             # optomechanical coupling / omega_m
    g_d: float = 1.0e-5             # atom-cavity coupling / omega_m
    eta: float = 3000.0             # drive amplitude / omega_m
    temperature: float = 0.0        # kelvin
    occupancy_convention: OccupancyConvention = OccupancyConvention.BOSE_EINSTEIN
    n_bar: float | None = None      # derived when left as None

    def __post_init__(self):
        if self.n_bar is None:
            object.__setattr__(
                self, "n_bar",
                thermal_occupancy(self.omega_m, self.temperature, self.occupancy_convention))

    def with_temperature(self, temperature: float) -> "SystemParams":
        """New params at a different bath temperature, n_bar recomputed."""
        return replace(self, temperature=temperature, n_bar=None)

    def rate_vector(self) -> np.ndarray:
        """Rates packed for the numerical kernels:
        [kappa, gamma, Gamma_a, Delta, omega_sigma, g_m, g_d, eta]."""
        return np.array([self.kappa, self.gamma, self.Gamma_a, self.Delta,
                         self.omega_sigma, self.g_m, self.g_d, self.eta])


def violations(params: SystemParams) -> list:
    """All invariant violations of a parameter set, one message per field."""
    problems = []
    for f in fields(params):
        v = getattr(params, f.name)
        if f.name == "occupancy_convention":
            if not isinstance(v, OccupancyConvention):
                problems.append(f"occupancy_convention: not an OccupancyConvention ({v!r})")
            continue
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            problems.append(f"{f.name}: not a finite number ({v!r})")
    if problems:
        return problems
    if params.omega_m <= 0:
        problems.append(f"omega_m: must be > 0, got {params.omega_m}")
    for name in ("kappa", "gamma", "Gamma_a", "omega_sigma", "n_bar"):
        v = getattr(params, name)
        if v < 0:
            problems.append(f"{name}: must be >= 0, got {v}")
    if params.temperature < 0:
        problems.append(f"temperature: must be >= 0, got {params.temperature}")
    if params.omega_m > 0 and params.temperature >= 0:
        expected = thermal_occupancy(params.omega_m, params.temperature,
                                     params.occupancy_convention)
        if not math.isclose(params.n_bar, expected, rel_tol=1e-12, abs_tol=1e-12):
            problems.append(
                f"n_bar: cached value {params.n_bar} inconsistent with "
                f"(omega_m, temperature, convention) -> {expected}")
    return problems


def validate(params: SystemParams) -> SystemParams:
    """Return the parameter set unchanged if every invariant holds.

    Raises ParameterError listing each violated invariant by field name.
    """
    problems = violations(params)
    if problems:
        raise ParameterError("invalid parameters: " + "; ".join(problems))
    return params


PARAM_KEYS = tuple(f.name for f in fields(SystemParams))


def params_from_mapping(mapping: dict) -> SystemParams:
    """Build SystemParams from string key/value pairs (config-file entries).

    Keys must match the SystemParams field names exactly; unknown keys are an
    error.  The result is validated before being returned.
    """
    kwargs = {}
    for key, raw in mapping.items():
        if key not in PARAM_KEYS:
            raise ConfigKeyError(key)
        if key == "occupancy_convention":
            try:
                kwargs[key] = OccupancyConvention(str(raw).strip().lower())
            except ValueError:
                raise ParameterError(
                    f"occupancy_convention: expected one of "
                    f"{[c.value for c in OccupancyConvention]}, got {raw!r}") from None
        else:
            try:
                kwargs[key] = float(raw)
            except (TypeError, ValueError):
                raise ParameterError(f"{key}: not a number ({raw!r})") from None
    return validate(SystemParams(**kwargs))


class ConfigKeyError(ParameterError):
    """Unknown parameter key in a configuration mapping."""

    def __init__(self, key):
        super().__init__(f"unknown parameter key {key!r} (known: {', '.join(PARAM_KEYS)})")
        self.key = key


@dataclass(frozen=True)
class MeanFieldState:
    """Expectation values of the six quadratures at one instant.

    ``t`` is dimensionless time omega_m * t.  Non-finite components are
    rejected at construction.
    """

    t: float
    q_c: float = 0.0
    p_c: float = 0.0
    q_m: float = 0.0
    p_m: float = 0.0
    q_d: float = 0.0
    p_d: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ParameterError(f"MeanFieldState.{f.name} is not finite: {v!r}")

    def to_vector(self) -> np.ndarray:
        """State as an array in the canonical STATE_ORDER."""
        return np.array([self.q_m, self.p_m, self.q_d, self.p_d, self.q_c, self.p_c])

    @classmethod
    def from_vector(cls, t: float, vec) -> "MeanFieldState":
        q_m, p_m, q_d, p_d, q_c, p_c = (float(x) for x in vec)
        return cls(t=float(t), q_c=q_c, p_c=p_c, q_m=q_m, p_m=p_m, q_d=q_d, p_d=p_d)


def energy(state: MeanFieldState, params: SystemParams) -> float:
    """Mean-field energy H/(hbar*omega_m), vacuum constants dropped.

    With dissipation switched off this quantity is an exact constant of the
    motion, which the integrator tests rely on.
    """
    n_c = 0.5 * (state.q_c ** 2 + state.p_c ** 2)
    n_m = 0.5 * (state.q_m ** 2 + state.p_m ** 2)
    n_d = 0.5 * (state.q_d ** 2 + state.p_d ** 2)
    return (params.Delta * n_c + n_m - params.omega_sigma * n_d
            + params.g_m * state.q_m * n_c
            + SQRT2 * params.g_d * state.q_c * state.q_d
            + SQRT2 * params.eta * state.p_c)
