"""The symmetry-determined fully separable reference state.

Permutation invariance forces identical single-atom factors and parity
symmetry forces each factor to be diagonal in the sigma_z basis,
diag(a, 1-a) with a the single-atom spin-up probability.  In the
collective J_z basis the resulting N-atom state is diagonal with
binomial weights C(N,n) a^n (1-a)^(N-n) over the number n of up spins;
only (a, N, log-weights) are ever stored, never a 2^N matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import InvalidDistributionError, InvalidParameterError


def _binomial_log_weights(a, n_atoms):
    """ln[C(N,n) a^n (1-a)^(N-n)] for n = 0..N, via log-gamma (-inf where the weight is 0)."""
    n = np.arange(n_atoms + 1, dtype=float)
    log_comb = gammaln(n_atoms + 1.0) - gammaln(n + 1.0) - gammaln(n_atoms - n + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(n > 0, n * np.log(a) if a > 0 else -np.inf, 0.0)
        down = np.where(n < n_atoms, (n_atoms - n) * np.log1p(-a) if a < 1 else -np.inf, 0.0)
    return log_comb + up + down


@dataclass(frozen=True)
class SeparableState:
    """Product reference state diag(a, 1-a)^(x N), stored through its binomial weights."""

    a: float
    n_atoms: int
    log_weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise InvalidParameterError(f"a must lie in [0, 1], got {self.a}")

    @classmethod
    def from_a(cls, a, n_atoms):
        return cls(a=float(a), n_atoms=int(n_atoms), log_weights=_binomial_log_weights(a, n_atoms))

    def weights(self):
        """The N+1 binomial probabilities (exact zeros where log-weight is -inf)."""
        return np.exp(self.log_weights)

    def jz_per_atom(self):
        return self.a - 0.5


def from_jz(jz_per_atom, n_atoms) -> SeparableState:
    """Reference state matched to a target <J_z>/N through a = 1/2 + <J_z>/N."""
    if not -0.5 <= jz_per_atom <= 0.5:
        raise InvalidParameterError(f"<J_z>/N must lie in [-1/2, 1/2], got {jz_per_atom}")
    return SeparableState.from_a(0.5 + jz_per_atom, n_atoms)


def log_weight(state: SeparableState, n):
    """ln of the weight of the n-up-spins level; IndexError outside 0..N."""
    if not 0 <= n <= state.n_atoms:
        raise IndexError(f"n must lie in 0..{state.n_atoms}, got {n}")
    return float(state.log_weights[n])


def _overlap_with_weights(a, n_atoms, probs):
    w = np.exp(_binomial_log_weights(a, n_atoms))
    return float(np.dot(w, probs))


def _golden_max(f, lo, hi, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def nearest_a(diagonal_probs, tol=1e-8):
    """Reference-state parameter for a given atomic J_z-basis diagonal.

    Returns ``(a_jz_matched, a_argmax)``: the <J_z>-matching prescription
    a = mean(n)/N, and the a maximizing the weighted overlap
    sum_n C(N,n) a^n (1-a)^(N-n) p_n located by golden-section search.
    The two coincide exactly when p is itself binomial; callers can
    compare them when it is not.
    """
    p = np.asarray(diagonal_probs, dtype=float)
    if p.ndim != 1 or len(p) < 2:
        raise InvalidDistributionError("diagonal_probs must be a vector of length N+1 >= 2")
    if p.min() < -1e-12:
        raise InvalidDistributionError(f"negative probability {p.min()}")
    if abs(p.sum() - 1.0) > 1e-8:
        raise InvalidDistributionError(f"probabilities sum to {p.sum()}, not 1")
    n_atoms = len(p) - 1
    mean_n = float(np.dot(np.arange(n_atoms + 1), p))
    a_matched = min(max(mean_n / n_atoms, 0.0), 1.0)
    a_best = _golden_max(lambda a: _overlap_with_weights(a, n_atoms, p), 0.0, 1.0, tol)
    return a_matched, a_best
