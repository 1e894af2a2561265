"""Brute-force Rayleigh-Schrodinger perturbation oracle, orders 1 and 2.

Built and validated before the series machinery it arbitrates: every
derived constant in the test suite that cites a perturbative shift is
regenerated by these sums, never copied.

For complex perturbations the second-order numerator is the product
V_nm V_mn, not |V_mn|^2 of moduli: for V = i x^3 the two pick up opposite
signs, and the product convention is the one that matches the exact
spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .opalg import OperatorMatrix, StateVector

__all__ = ["PerturbationProblem", "SecondOrderShift", "rs_energy2", "rs_state1"]

DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class PerturbationProblem:
    """Nondegenerate level of a solved H0 perturbed by V (unit coupling)."""

    H0_energies: np.ndarray
    V: OperatorMatrix
    level: int

    def __post_init__(self):
        e = np.asarray(self.H0_energies, dtype=float)
        if len(e) != self.V.basis.dim:
            raise ValueError("energy list must match the operator dimension")
        if not 0 <= self.level < len(e):
            raise ValueError(f"level {self.level} out of range")
        object.__setattr__(self, "H0_energies", e)


class SecondOrderShift(NamedTuple):
    first_order: float
    second_order: float
    truncation_estimate: float


def rs_energy2(prob: PerturbationProblem) -> SecondOrderShift:
    """First- and second-order energy shifts of the chosen level.

    second_order = sum_{m != n} V_nm V_mn / (E_n - E_m) over the truncated
    basis; the magnitude of the last retained term is reported as the
    truncation estimate.
    """
    n = prob.level
    E = prob.H0_energies
    V = prob.V.entries
    first = V[n, n]
    terms = []
    for m in range(len(E)):
        if m == n:
            continue
        num = V[n, m] * V[m, n]
        if num == 0:
            continue
        gap = E[n] - E[m]
        if abs(gap) < DEGENERACY_TOL:
            raise ValueError(
                f"degenerate denominator between levels {n} and {m} (gap {gap:.2e})"
            )
        terms.append(num / gap)
    second = complex(np.sum(terms)) if terms else 0.0 + 0.0j
    trunc = abs(terms[-1]) if terms else 0.0
    return SecondOrderShift(
        first_order=float(first.real),
        second_order=float(second.real),
        truncation_estimate=float(trunc),
    )


def rs_state1(prob: PerturbationProblem) -> StateVector:
    """First-order state correction sum_{j != n} V_jn / (E_n - E_j) |j>.

    The coupling constant is factored out; callers scale by g and add the
    unperturbed state themselves.
    """
    n = prob.level
    E = prob.H0_energies
    V = prob.V.entries
    amp = np.zeros(len(E), dtype=complex)
    for j in range(len(E)):
        if j == n or V[j, n] == 0:
            continue
        gap = E[n] - E[j]
        if abs(gap) < DEGENERACY_TOL:
            raise ValueError(
                f"degenerate denominator between levels {n} and {j} (gap {gap:.2e})"
            )
        amp[j] = V[j, n] / gap
    return StateVector(amp, prob.V.basis)
