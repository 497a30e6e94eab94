"""Spin-squeezing entanglement witnesses on collective first/second moments.

Four inequalities on the moments of J_x, J_y, J_z hold for every fully
separable state; violation of any one certifies entanglement.  In
per-atom normalized form (moments stored as <J_a>/N and <J_a^2>/N^2)
the large-N inequalities read

    (a)  <Jx^2> + <Jy^2> + <Jz^2>  <=  N(N+2)/4          (sanity bound,
         satisfied by every quantum state; checked, never a witness)
    (b)  (V_x + V_y + V_z) - 1/(2N)                >= 0
    (c)  N V_g - (<Ja^2> + <Jb^2>)/N^2 + 1/(2N)    >= 0
    (d)  N (V_a + V_b) - <Jg^2>/N^2 - 1/4          >= 0

with V_a = variance(J_a)/N^2 and (a, b, g) running over all axis
permutations.  The finite-N counterparts (same content up to 1/N
corrections) are provided as an alternate path for moments produced by
exact diagonalization.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import InvalidParameterError

AXES = ("x", "y", "z")
PERMUTATIONS = tuple(itertools.permutations(AXES))

#: violations smaller than this are floating-point noise at equality boundaries
TOL_WITNESS = 1e-9

_INVARIANT_SLACK = 1e-10


@dataclass(frozen=True)
class MomentSet:
    """Per-atom normalized collective-spin moments.

    ``first[i]`` holds <J_i>/N and ``second[i]`` holds <J_i^2>/N^2 for
    i in (x, y, z); variances are derived.
    """

    n_atoms: int
    first: tuple
    second: tuple

    def variance(self, axis):
        """variance(J_axis)/N^2."""
        i = AXES.index(axis)
        return self.second[i] - self.first[i] ** 2

    def total_second(self):
        return sum(self.second)

    def validate(self, slack=_INVARIANT_SLACK):
        """Check variance nonnegativity and the universal sum bound (a)."""
        for axis in AXES:
            if self.variance(axis) < -slack:
                raise InvalidParameterError(
                    f"negative variance for J_{axis}: {self.variance(axis)}"
                )
        n = self.n_atoms
        bound = (n * (n + 2) / 4.0) / n**2
        if self.total_second() > bound + slack:
            raise InvalidParameterError(
                f"second moments sum to {self.total_second()}, above the bound {bound}"
            )


@dataclass(frozen=True)
class WitnessEntry:
    inequality: str  # "b", "c" or "d"
    axes: tuple | None  # (alpha, beta, gamma) for "c"/"d", None for "b"
    lhs: float
    violated: bool

    @property
    def label(self):
        if self.axes is None:
            return self.inequality
        return f"{self.inequality}:{'-'.join(self.axes)}"


@dataclass(frozen=True)
class WitnessReport:
    entries: tuple

    @property
    def any_violation(self):
        return any(e.violated for e in self.entries)

    def violations(self):
        return [e for e in self.entries if e.violated]

    def lhs(self, inequality, axes=None):
        for e in self.entries:
            if e.inequality == inequality and e.axes == (tuple(axes) if axes else None):
                return e.lhs
        raise KeyError((inequality, axes))


def _report(entries, tol):
    return WitnessReport(
        tuple(WitnessEntry(kind, axes, lhs, lhs < -tol) for kind, axes, lhs in entries)
    )


def evaluate(moments: MomentSet, tol_witness=TOL_WITNESS) -> WitnessReport:
    """Large-N witness evaluation: one (b) entry, six (c) and six (d) entries."""
    moments.validate()
    n = moments.n_atoms
    var = {axis: moments.variance(axis) for axis in AXES}
    sec = dict(zip(AXES, moments.second))

    entries = [("b", None, var["x"] + var["y"] + var["z"] - 1.0 / (2 * n))]
    for alpha, beta, gamma in PERMUTATIONS:
        entries.append(
            ("c", (alpha, beta, gamma), n * var[gamma] - sec[alpha] - sec[beta] + 1.0 / (2 * n))
        )
    for alpha, beta, gamma in PERMUTATIONS:
        entries.append(
            ("d", (alpha, beta, gamma), n * (var[alpha] + var[beta]) - sec[gamma] - 0.25)
        )
    return _report(entries, tol_witness)


def evaluate_finite_n(moments: MomentSet, tol_witness=TOL_WITNESS) -> WitnessReport:
    """Finite-N witness evaluation (normalized by N^2 for comparability)."""
    moments.validate()
    n = moments.n_atoms
    var = {axis: moments.variance(axis) for axis in AXES}
    sec = dict(zip(AXES, moments.second))

    entries = [("b", None, var["x"] + var["y"] + var["z"] - 1.0 / (2 * n))]
    for alpha, beta, gamma in PERMUTATIONS:
        entries.append(
            (
                "c",
                (alpha, beta, gamma),
                (n - 1) * var[gamma] - sec[alpha] - sec[beta] + 1.0 / (2 * n),
            )
        )
    for alpha, beta, gamma in PERMUTATIONS:
        entries.append(
            (
                "d",
                (alpha, beta, gamma),
                (n - 1) * (var[alpha] + var[beta]) - sec[gamma] - (n - 2) / (4.0 * n),
            )
        )
    return _report(entries, tol_witness)
