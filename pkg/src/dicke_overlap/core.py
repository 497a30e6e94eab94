"""Model parameters, critical coupling/temperature, and the order parameter.

Units: hbar = k_B = 1 throughout; frequencies, couplings and temperatures
are dimensionless.  The Hamiltonian is

    H = omega a'a + omega0 J_z + (lambda/sqrt(N)) (a' + a)(J+ + J-),

with J_z = sum_i sigma_i^z / 2 and J+- = sum_i sigma_i^+-.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InvalidParameterError
from .numerics import find_root


class PhaseLabel(enum.Enum):
    NORMAL = "normal"
    SUPERRADIANT = "superradiant"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ModelParams:
    """Dicke-model parameters: field frequency, level splitting, coupling, atom count."""

    omega: float
    omega0: float
    coupling: float
    n_atoms: int

    def __post_init__(self):
        if not (self.omega > 0 and self.omega0 > 0):
            raise InvalidParameterError(
                f"frequencies must be positive, got omega={self.omega}, omega0={self.omega0}"
            )
        if self.coupling < 0:
            raise InvalidParameterError(f"coupling must be >= 0, got {self.coupling}")
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise InvalidParameterError(f"n_atoms must be a positive integer, got {self.n_atoms}")

    @property
    def critical(self) -> float:
        return critical_coupling(self.omega, self.omega0)

    def with_coupling(self, coupling) -> "ModelParams":
        return ModelParams(self.omega, self.omega0, coupling, self.n_atoms)


def critical_coupling(omega, omega0):
    """Normal/superradiant boundary coupling sqrt(omega * omega0) / 2."""
    if not (omega > 0 and omega0 > 0):
        raise InvalidParameterError(
            f"frequencies must be positive, got omega={omega}, omega0={omega0}"
        )
    return math.sqrt(omega * omega0) / 2.0


# Default search bracket for the inverse critical temperature.
BETA_BRACKET = (1e-6, 1e3)


def _beta_c_residual(beta, params):
    # beta - (omega0 / 2 lambda^2) * tanh(beta omega / 2) / tanh(beta omega0 / 2)
    return beta - (params.omega0 / (2.0 * params.coupling**2)) * (
        math.tanh(beta * params.omega / 2.0) / math.tanh(beta * params.omega0 / 2.0)
    )


def critical_temperature(params: ModelParams):
    """Critical temperature from the self-consistency relation

        beta_c = (omega0 / 2 lambda^2) tanh(beta_c omega / 2) / tanh(beta_c omega0 / 2),

    solved by bisection on beta in ``BETA_BRACKET``; returns None when the
    bracket contains no sign change (e.g. lambda = 0).

    For omega = omega0 the tanh factors cancel and the root is exactly
    beta_c = omega0 / (2 lambda^2), i.e. T_c = 2 lambda^2 / omega0.  Note
    this relation yields a finite T_c for every lambda > 0, including
    lambda below the zero-temperature boundary; see
    ``critical_temperature_tanh_form`` for the variant that closes at the
    T = 0 transition point.
    """
    if params.coupling == 0.0:
        return None
    lo, hi = BETA_BRACKET
    f = lambda beta: _beta_c_residual(beta, params)
    if f(lo) * f(hi) > 0:
        return None
    beta_c = find_root(f, (lo, hi))
    return 1.0 / beta_c


def reduced_critical_temperature(params: ModelParams):
    """The resonant-case critical line T_c = 2 lambda^2 / omega0 (exact for omega = omega0)."""
    return 2.0 * params.coupling**2 / params.omega0


def critical_temperature_tanh_form(params: ModelParams):
    """Alternative critical-temperature relation

        tanh(beta_c omega0 / 2) = omega omega0 / (4 lambda^2) = (lambda_c / lambda)^2,

    which has a solution only above the zero-temperature boundary
    (lambda > lambda_c) and gives T_c -> 0 as lambda -> lambda_c+.
    Returns None for lambda <= lambda_c.  Exposed for comparison with
    ``critical_temperature``; the two relations disagree except in the
    lambda >> lambda_c regime.
    """
    mu = (params.critical / params.coupling) ** 2 if params.coupling > 0 else math.inf
    if mu >= 1.0:
        return None
    beta_c = 2.0 * math.atanh(mu) / params.omega0
    return 1.0 / beta_c


def order_parameter_zero_t(params: ModelParams):
    """Ground-state <J_z>/N:  -1/2 below the critical coupling, -lambda_c^2/(2 lambda^2) above."""
    lc = params.critical
    if params.coupling <= lc:
        return -0.5
    return -(lc**2) / (2.0 * params.coupling**2)


def phase_zero_t(params: ModelParams) -> PhaseLabel:
    return PhaseLabel.NORMAL if params.coupling < params.critical else PhaseLabel.SUPERRADIANT


def phase_finite_t(params: ModelParams, temperature) -> PhaseLabel:
    """Phase at temperature T > 0: superradiant below the critical line for lambda > lambda_c."""
    if temperature <= 0:
        return phase_zero_t(params)
    if params.coupling <= params.critical:
        return PhaseLabel.NORMAL
    tc = critical_temperature(params)
    if tc is not None and temperature < tc:
        return PhaseLabel.SUPERRADIANT
    return PhaseLabel.NORMAL
