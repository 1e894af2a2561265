"""Concrete model builders.

Swanson oscillator: H = p^2/(2 m1) + (i/2) w eps {x,p} + (1/2) m2 w^2 x^2
with m2 = (1 - eps^2) m1, together with its two exact metric choices and
their closed-form observables and equivalent Hermitian oscillators.

Imaginary cubic oscillator: H = (p^2 + x^2)/2 + i g x^3 with the
leading-order metric generator, the printed observable series, the
second-order equivalent Hermitian Hamiltonian and first-order corrected
eigenstates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .opalg import (
    BasisSpec,
    OperatorMatrix,
    StateVector,
    build_xp,
    eig_general,
    fix_phase,
    interior_norm,
)
from .nhqcore import (
    MetricPackage,
    ObservablePair,
    Provenance,
    metric_from_Q,
    observable_from,
)

__all__ = [
    "MetricCase",
    "SwansonSpec",
    "CubicSpec",
    "SpectrumReport",
    "swanson_H",
    "swanson_metric",
    "swanson_observables",
    "swanson_h",
    "cubic_H",
    "cubic_metric",
    "cubic_XP_series",
    "cubic_h_series",
    "cubic_first_order_states",
    "spectrum",
    "fock_parity",
]

REALITY_THRESHOLD = 1e-8
METRIC_BUILD_TOL = 1e-8


class MetricCase(enum.Enum):
    """Which exact Swanson metric to use: Q built from x^2 or from p^2."""

    CASE_I_QX = "case_i_qx"
    CASE_II_QP = "case_ii_qp"


@dataclass(frozen=True)
class SwansonSpec:
    m1: float
    epsilon: float
    omega: float
    metric_case: MetricCase

    def __post_init__(self):
        if self.m1 <= 0 or self.omega <= 0:
            raise ValueError("m1 and omega must be positive")
        if not abs(self.epsilon) < 1.0:
            raise ValueError(
                f"|epsilon| must be < 1 (else m2 <= 0); got {self.epsilon}"
            )

    @property
    def m2(self) -> float:
        return (1.0 - self.epsilon**2) * self.m1


@dataclass(frozen=True)
class CubicSpec:
    g: float = field(default=0.02)


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: list[complex]
    max_imag: float
    reality_flag: bool


def _xp(basis: BasisSpec, s: SwansonSpec):
    return build_xp(basis, s.m1, s.omega)


def swanson_H(s: SwansonSpec, basis: BasisSpec) -> OperatorMatrix:
    """One axis of the Swanson Hamiltonian, non-Hermitian for eps != 0."""
    x, p = _xp(basis, s)
    anti = x @ p + p @ x
    return (
        (1.0 / (2.0 * s.m1)) * (p @ p)
        + (0.5j * s.omega * s.epsilon) * anti
        + (0.5 * s.m2 * s.omega**2) * (x @ x)
    )


def swanson_metric(s: SwansonSpec, basis: BasisSpec) -> MetricPackage:
    """Exact metric package for the requested case.

    Case I:  Q = eps m1 w x^2.
    Case II: Q = -eps p^2 / (m2 w), the quadratic-in-p generator that maps
    x to x + i eps p/(m2 w).  The defining consequence is verified
    numerically at construction time.
    """
    x, p = _xp(basis, s)
    if s.metric_case is MetricCase.CASE_I_QX:
        Q = (s.epsilon * s.m1 * s.omega) * (x @ x)
    else:
        Q = (-s.epsilon / (s.m2 * s.omega)) * (p @ p)
    pkg = metric_from_Q(Q, Provenance.exact())
    # construction-time consistency: the metric must generate the model's
    # closed-form observables
    if s.metric_case is MetricCase.CASE_I_QX:
        target = p + (1j * s.epsilon * s.m1 * s.omega) * x
        got = observable_from(p, pkg)
    else:
        target = x + (1j * s.epsilon / (s.m2 * s.omega)) * p
        got = observable_from(x, pkg)
    res = interior_norm(got - target, max(basis.margin, 6))
    if res > METRIC_BUILD_TOL:
        raise RuntimeError(
            f"swanson metric self-check failed: observable residual {res:.3e}"
        )
    return pkg


def swanson_observables(s: SwansonSpec, basis: BasisSpec) -> ObservablePair:
    """Closed-form physical observables (the similarity series terminates)."""
    x, p = _xp(basis, s)
    if s.metric_case is MetricCase.CASE_I_QX:
        X = x
        P = p + (1j * s.epsilon * s.m1 * s.omega) * x
    else:
        X = x + (1j * s.epsilon / (s.m2 * s.omega)) * p
        P = p
    return ObservablePair(X=X, P=P, metric=swanson_metric(s, basis))


def swanson_h(s: SwansonSpec, basis: BasisSpec) -> tuple[OperatorMatrix, float]:
    """Equivalent Hermitian oscillator and its effective mass.

    Case I gives mu = m1, case II gives mu = m2; the frequency is the same,
    so the two cases share the spectrum w (n + 1/2).
    """
    x, p = _xp(basis, s)
    mu = s.m1 if s.metric_case is MetricCase.CASE_I_QX else s.m2
    h = (1.0 / (2.0 * mu)) * (p @ p) + (0.5 * mu * s.omega**2) * (x @ x)
    return h, mu


def cubic_H(c: CubicSpec, basis: BasisSpec) -> OperatorMatrix:
    """H = (p^2 + x^2)/2 + i g x^3 at unit mass and frequency."""
    x, p = build_xp(basis, 1.0, 1.0)
    return 0.5 * (p @ p + x @ x) + (1j * c.g) * (x @ x @ x)


def cubic_metric(c: CubicSpec, basis: BasisSpec) -> MetricPackage:
    """Leading-order metric generator Q = -g (4/3 p^3 + 2 x p x)."""
    x, p = build_xp(basis, 1.0, 1.0)
    Q = (-c.g) * ((4.0 / 3.0) * (p @ p @ p) + 2.0 * (x @ p @ x))
    return metric_from_Q(Q, Provenance.perturbative(1))


def cubic_XP_series(c: CubicSpec, basis: BasisSpec) -> ObservablePair:
    """Observable series through second order in g, exactly as printed."""
    x, p = build_xp(basis, 1.0, 1.0)
    g = c.g
    X = (
        x
        + (1j * g) * (x @ x + 2.0 * (p @ p))
        + (g * g) * (-(x @ x @ x) + 2.0 * (p @ x @ p))
    )
    P = (
        p
        - (1j * g) * (x @ p + p @ x)
        + (g * g) * (2.0 * (p @ p @ p) - x @ p @ x)
    )
    return ObservablePair(X=X, P=P, metric=cubic_metric(c, basis), order=2)


def mixed_quartic(basis: BasisSpec) -> OperatorMatrix:
    """Fully symmetrized mixed monomial: the average of all six orderings
    of two x's and two p's.

    The three-ordering average (x^2p^2 + xp^2x + p^2x^2)/3 differs from
    this by the scalar 1/6; only the fully symmetrized form reproduces the
    independently computed second-order level shift, which is how the
    ground-state constant in the equivalent Hamiltonian is pinned here.
    """
    x, p = build_xp(basis, 1.0, 1.0)
    x2, p2 = x @ x, p @ p
    return (1.0 / 6.0) * (
        x2 @ p2
        + x @ p @ x @ p
        + x @ p2 @ x
        + p @ x @ p @ x
        + p @ x2 @ p
        + p2 @ x2
    )


def cubic_h_series(c: CubicSpec, basis: BasisSpec) -> OperatorMatrix:
    """Equivalent Hermitian Hamiltonian through second order in g."""
    x, p = build_xp(basis, 1.0, 1.0)
    g2 = c.g * c.g
    quart = x @ x @ x @ x
    return (
        0.5 * (p @ p + x @ x)
        + (3.0 * g2)
        * (0.5 * quart + mixed_quartic(basis) - (1.0 / 6.0) * OperatorMatrix.identity(basis))
    )


def cubic_first_order_states(
    c: CubicSpec, basis: BasisSpec, level: int
) -> StateVector:
    """First-order corrected eigenstate of the cubic Hamiltonian.

    Standard first-order coefficients with energy denominators,
    c_j = g <j| i x^3 |level> / (E_level - E_j); validated against exact
    diagonalization rather than against any printed shortcut.
    """
    if not 0 <= level < basis.dim // 3:
        raise ValueError(
            f"level {level} outside the trusted lower third of a dim-{basis.dim} basis"
        )
    x, _ = build_xp(basis, 1.0, 1.0)
    V = 1j * (x @ x @ x).entries
    amp = np.zeros(basis.dim, dtype=complex)
    amp[level] = 1.0
    for j in range(basis.dim):
        if j == level:
            continue
        vjn = V[j, level]
        if vjn != 0:
            amp[j] = c.g * vjn / (level - j)  # E_n - E_j = n - j at hbar w = 1
    amp = fix_phase(amp / np.linalg.norm(amp))
    return StateVector(amp, basis)


def spectrum(H: OperatorMatrix, trusted_count: int) -> SpectrumReport:
    """Sorted eigenvalues with a reality verdict over the trusted window."""
    if not 1 <= trusted_count <= H.basis.dim // 3:
        raise ValueError(
            f"trusted_count must lie in [1, dim/3 = {H.basis.dim // 3}], "
            f"got {trusted_count}"
        )
    pairs = eig_general(H)
    vals = [w for w, _ in pairs]
    window = vals[:trusted_count]
    max_imag = max(abs(w.imag) for w in window)
    return SpectrumReport(
        eigenvalues=vals,
        max_imag=max_imag,
        reality_flag=max_imag < REALITY_THRESHOLD,
    )


def fock_parity(basis: BasisSpec) -> OperatorMatrix:
    """Spatial parity in the number basis: diag((-1)^n)."""
    return OperatorMatrix(np.diag((-1.0) ** np.arange(basis.dim)).astype(complex), basis)
