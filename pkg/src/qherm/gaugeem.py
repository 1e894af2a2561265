"""Electromagnetic gauging of quasi-Hermitian systems.

Position-dependent phase transformations act through the physical
position observable X, so gauging proceeds by minimal substitution
P -> P - e A(X) in the Hamiltonian written in terms of (X, P).  In the
dipole approximation A(X) collapses to a scalar amplitude times the
identity, and first-order transition rates follow the golden-rule form
rate = 2 pi |A(w_ij)|^2 (e^2/mu^2) |<i| eta P |j>|^2  (hbar = 1).

The gauge function alpha and potential profile A are polynomials of
degree <= 4.  Under psi -> exp(i e alpha(X)) psi the potential shifts as
A -> A + alpha'; with that pairing the covariance identity
exp(-i e alpha(X)) (P - e A'(X)) exp(i e alpha(X)) = P - e A(X) holds
identically (the momentum commutator produces +e alpha'(X)).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .opalg import (
    BasisSpec,
    OperatorMatrix,
    StateVector,
    eig_general,
    fix_phase,
    general_expm,
    interior_norm,
)
from .nhqcore import (
    MetricPackage,
    ObservablePair,
    conjugate_by_exponent,
    eta_inner,
    similarity_transform,
    state_from_hermitian,
    to_hermitian,
)
from .models import SwansonSpec, swanson_H, swanson_h, swanson_observables

__all__ = [
    "PolyFn",
    "PlaneWave",
    "PulseSpec",
    "Route",
    "TransitionResult",
    "Monomial",
    "oscillator_monomials",
    "cubic_h2_monomials",
    "function_of_X",
    "phase_transform",
    "gauge_covariance_residual",
    "minimal_substitution",
    "linear_coupling",
    "h_picture_eigensystem",
    "transition_element",
    "dipole_identity_residual",
    "transition_rate",
    "transition_rate_3d",
]

MAX_POLY_DEGREE = 4
EIGEN_CHECK_TOL = 1e-6


@dataclass(frozen=True)
class PolyFn:
    """Polynomial c0 + c1 xi + ... + cd xi^d with d <= 4."""

    coefficients: tuple[complex, ...]

    def __post_init__(self):
        cs = tuple(complex(c) for c in self.coefficients)
        if len(cs) == 0 or len(cs) - 1 > MAX_POLY_DEGREE:
            raise ValueError(f"polynomial degree must be <= {MAX_POLY_DEGREE}")
        if not all(np.isfinite(c.real) and np.isfinite(c.imag) for c in cs):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coefficients", cs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def derivative(self) -> "PolyFn":
        cs = self.coefficients
        if len(cs) == 1:
            return PolyFn((0.0,))
        return PolyFn(tuple(k * cs[k] for k in range(1, len(cs))))

    def of_matrix(self, M: OperatorMatrix) -> OperatorMatrix:
        """Horner evaluation on an operator argument."""
        out = OperatorMatrix(
            np.full((M.basis.dim, M.basis.dim), 0.0, dtype=complex), M.basis
        )
        for c in reversed(self.coefficients):
            out = out @ M + c * OperatorMatrix.identity(M.basis)
        return out


@dataclass(frozen=True)
class PlaneWave:
    """Marker for the plane-wave profile exp(i k xi)."""

    k: float


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian spectral amplitude A(w) = amplitude exp(-(w - center)^2 / 2 width^2)."""

    amplitude: float
    center: float
    width: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("pulse width must be positive")
        if self.amplitude < 0:
            raise ValueError("pulse amplitude must be non-negative")

    def spectral_amplitude(self, omega: float) -> float:
        return self.amplitude * float(
            np.exp(-((omega - self.center) ** 2) / (2.0 * self.width**2))
        )


class Route(enum.Enum):
    """Which picture the transition matrix element is computed in."""

    H_PICTURE = "HPicture"
    h_PICTURE = "hPicture"


@dataclass(frozen=True)
class TransitionResult:
    i: int
    j: int
    omega_ij: float
    element: complex
    rate: float
    route: Route
    effective_mass: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("transition rate cannot be negative")


Monomial = tuple[complex, str]  # coefficient and a word over the letters X, P


def _check_monomials(monomials: list[Monomial]) -> None:
    for coeff, word in monomials:
        if len(word) > MAX_POLY_DEGREE:
            raise ValueError(f"monomial degree {len(word)} exceeds {MAX_POLY_DEGREE}")
        if any(ch not in "XP" for ch in word):
            raise ValueError(f"monomial word {word!r} must use only X and P")


def oscillator_monomials(mu: float, omega: float) -> list[Monomial]:
    """h = P^2/(2 mu) + mu w^2 X^2 / 2 as a monomial list."""
    return [(1.0 / (2.0 * mu), "PP"), (0.5 * mu * omega**2, "XX")]


def cubic_h2_monomials(g: float) -> list[Monomial]:
    """Second-order equivalent Hamiltonian of the cubic model as monomials."""
    g2 = g * g
    mixed = ["XXPP", "XPXP", "XPPX", "PXPX", "PXXP", "PPXX"]
    out: list[Monomial] = [(0.5, "PP"), (0.5, "XX"), (1.5 * g2, "XXXX")]
    out.extend((0.5 * g2, w) for w in mixed)
    out.append((-0.5 * g2, ""))
    return out


def function_of_X(
    f: PolyFn | PlaneWave, metric: MetricPackage, x_op: OperatorMatrix
) -> OperatorMatrix:
    """f(X) for the physical position X generated by the metric from x_op.

    The similarity transform is applied to the argument first and the
    function second (functional calculus commutes with similarity);
    conjugating the dense matrix f(x) instead would amplify truncation
    junk by the condition number of the metric exponential.
    """
    X = similarity_transform(x_op, metric, power=0.5)
    if isinstance(f, PlaneWave):
        return general_expm(1j * f.k * X)
    return f.of_matrix(X)


def phase_transform(
    psi: StateVector, alpha: PolyFn, e_charge: float, pair: ObservablePair
) -> StateVector:
    """psi -> exp(i e alpha(X)) psi; preserves <psi|eta|psi>."""
    U = general_expm((1j * e_charge) * alpha.of_matrix(pair.X))
    return StateVector(U.entries @ psi.amplitudes, psi.basis)


def _poly_sum(f: PolyFn, g: PolyFn) -> PolyFn:
    n = max(len(f.coefficients), len(g.coefficients))
    fc = f.coefficients + (0.0,) * (n - len(f.coefficients))
    gc = g.coefficients + (0.0,) * (n - len(g.coefficients))
    return PolyFn(tuple(a + b for a, b in zip(fc, gc)))


def gauge_covariance_residual(
    alpha: PolyFn,
    A: PolyFn,
    e_charge: float,
    pair: ObservablePair,
    metric: MetricPackage,
    margin: int,
) -> float:
    """Covariance defect of the combined gauge transformation.

    Forms the shifted potential A' = A + alpha' and measures
    interior_norm( e^{-ie alpha(X)} (P - e A'(X)) e^{ie alpha(X)} - (P - e A(X)) ).
    """
    X, P = pair.X, pair.P
    E = (1j * e_charge) * alpha.of_matrix(X)
    A_prime = _poly_sum(A, alpha.derivative())
    M = P - e_charge * A_prime.of_matrix(X)
    conj = conjugate_by_exponent(M, -1.0 * E)
    target = P - e_charge * A.of_matrix(X)
    return interior_norm(conj - target, margin)


def minimal_substitution(
    model_h: list[Monomial], pair: ObservablePair, eA0: float
) -> OperatorMatrix:
    """h(X, P - eA0) in the dipole approximation A(X) = A0 * identity."""
    _check_monomials(model_h)
    basis = pair.X.basis
    Pshift = pair.P - eA0 * OperatorMatrix.identity(basis)
    letters = {"X": pair.X, "P": Pshift}
    out = OperatorMatrix.zeros(basis)
    for coeff, word in model_h:
        term = OperatorMatrix.identity(basis)
        for ch in word:
            term = term @ letters[ch]
        out = out + coeff * term
    return out


def linear_coupling(
    model_h: list[Monomial], pair: ObservablePair, metric: MetricPackage
) -> OperatorMatrix:
    """Operator W multiplying +eA0 in the first-order dipole coupling.

    Central difference of the minimal substitution at eA0 = +-1, which is
    exact when h is at most quadratic in P (true for every in-scope model).
    For the oscillator W = -P/mu.
    """
    _check_monomials(model_h)
    worst = max((w.count("P") for _, w in model_h), default=0)
    if worst > 2:
        raise ValueError(
            f"linear_coupling needs degree <= 2 in P; found a monomial with {worst}"
        )
    plus = minimal_substitution(model_h, pair, +1.0)
    minus = minimal_substitution(model_h, pair, -1.0)
    return 0.5 * (plus - minus)


def h_picture_eigensystem(
    H: OperatorMatrix, metric: MetricPackage
) -> tuple[np.ndarray, list[StateVector]]:
    """Eigensystem of the equivalent Hermitian Hamiltonian.

    The top quarter of the basis is dropped before diagonalizing: that is
    where the commutator-series corner defects sit, and for perturbative
    metrics they would otherwise masquerade as spurious low eigenvalues.
    """
    dim = H.basis.dim
    nb = dim - dim // 4
    h = to_hermitian(H, metric)
    hh = (h.entries + h.entries.conj().T) / 2.0
    w, V = np.linalg.eigh(hh[:nb, :nb])
    vecs = []
    for k in range(nb):
        full = np.zeros(dim, dtype=complex)
        full[:nb] = V[:, k]
        vecs.append(StateVector(fix_phase(full), H.basis))
    return w, vecs


def _trusted_window(basis: BasisSpec) -> int:
    return basis.dim // 3


def transition_element(
    H: OperatorMatrix,
    i: int,
    j: int,
    pair: ObservablePair,
    metric: MetricPackage,
    route: Route,
) -> complex:
    """<psi_i| eta P |psi_j> (H picture) or <phi_i| p |phi_j> (h picture).

    The two routes agree to 1e-8 for exact metrics and to the metric's
    perturbative order otherwise.
    """
    basis = H.basis
    trusted = _trusted_window(basis)
    if not (0 <= i < trusted and 0 <= j < trusted):
        raise ValueError(f"levels ({i}, {j}) outside the trusted window < {trusted}")

    if route is Route.h_PICTURE:
        _, phis = h_picture_eigensystem(H, metric)
        p_herm = similarity_transform(pair.P, metric, power=-0.5)
        return complex(
            np.vdot(phis[i].amplitudes, p_herm.entries @ phis[j].amplitudes)
        )

    if metric.provenance.is_exact:
        # Eigenvectors of H built through the state map: psi = rho^-1 phi is
        # a right-eigenvector of H in the physical norm, whereas a general
        # eigensolver loses ~kappa(V) * eps on these non-normal matrices.
        # The consistency probe is eta-weighted: the Euclidean eigen-residual
        # would be dominated by components the metric suppresses anyway.
        energies, phis = h_picture_eigensystem(H, metric)
        psis = []
        for k in (i, j):
            psi = state_from_hermitian(phis[k], metric)
            nrm = np.sqrt(abs(eta_inner(psi, psi, metric)))
            psi = StateVector(psi.amplitudes / nrm, basis)
            ov = complex(np.vdot(phis[k].amplitudes, metric.rho.entries @ psi.amplitudes))
            psi = StateVector(psi.amplitudes * np.exp(-1j * np.angle(ov)), basis)
            e_eta = complex(
                np.vdot(psi.amplitudes, metric.eta.entries @ (H.entries @ psi.amplitudes))
            )
            if abs(e_eta - energies[k]) > EIGEN_CHECK_TOL * (1.0 + abs(energies[k])):
                raise ValueError(
                    f"level {k}: mapped state fails the energy consistency check "
                    f"(<psi|eta H|psi> = {e_eta:.6g} vs E = {energies[k]:.6g})"
                )
            psis.append(psi)
        psi_i, psi_j = psis
    else:
        pairs_ = eig_general(H)
        _, phis = h_picture_eigensystem(H, metric)
        psis = []
        for k in (i, j):
            psi = pairs_[k][1]
            nrm = np.sqrt(abs(eta_inner(psi, psi, metric)))
            psi = StateVector(psi.amplitudes / nrm, basis)
            ov = complex(np.vdot(phis[k].amplitudes, metric.rho.entries @ psi.amplitudes))
            psi = StateVector(psi.amplitudes * np.exp(-1j * np.angle(ov)), basis)
            psis.append(psi)
        psi_i, psi_j = psis
    w = pair.P.entries @ psi_j.amplitudes
    return complex(np.vdot(psi_i.amplitudes, metric.eta.entries @ w))


def _energies(H: OperatorMatrix, metric: MetricPackage) -> np.ndarray:
    w, _ = h_picture_eigensystem(H, metric)
    return w


def dipole_identity_residual(
    H: OperatorMatrix,
    i: int,
    j: int,
    pair: ObservablePair,
    metric: MetricPackage,
    mu: float,
) -> float:
    """| <phi_i|p|phi_j> - i mu w_ij <phi_i|x|phi_j> | with w_ij = E_i - E_j.

    Exact when the Hermitian-picture Hamiltonian has kinetic term
    p^2/(2 mu) and an x-only potential; mixed momentum-position terms
    (the cubic model at second order) break it at O(g^2).
    """
    energies, phis = h_picture_eigensystem(H, metric)
    x_herm = similarity_transform(pair.X, metric, power=-0.5)
    p_herm = similarity_transform(pair.P, metric, power=-0.5)
    om = float(energies[i] - energies[j])
    me_p = complex(np.vdot(phis[i].amplitudes, p_herm.entries @ phis[j].amplitudes))
    me_x = complex(np.vdot(phis[i].amplitudes, x_herm.entries @ phis[j].amplitudes))
    return abs(me_p - 1j * mu * om * me_x)


def transition_rate(
    H: OperatorMatrix,
    i: int,
    j: int,
    pair: ObservablePair,
    metric: MetricPackage,
    mu: float,
    e_charge: float,
    pulse: PulseSpec,
    route: Route,
) -> TransitionResult:
    """Golden-rule rate 2 pi A(w_ij)^2 (e^2/mu^2) |<i|eta P|j>|^2."""
    energies = _energies(H, metric)
    omega_ij = float(energies[i] - energies[j])
    element = transition_element(H, i, j, pair, metric, route)
    amp = pulse.spectral_amplitude(omega_ij)
    rate = 2.0 * np.pi * amp**2 * (e_charge**2 / mu**2) * abs(element) ** 2
    return TransitionResult(
        i=i, j=j, omega_ij=omega_ij, element=element, rate=rate,
        route=route, effective_mass=mu,
    )


def transition_rate_3d(
    levels_i: tuple[int, int, int],
    levels_j: tuple[int, int, int],
    polarization: tuple[float, float, float],
    s: SwansonSpec,
    pulse: PulseSpec,
    e_charge: float,
    basis: BasisSpec,
    route: Route = Route.h_PICTURE,
) -> TransitionResult:
    """Three-dimensional Swanson rate by separability over identical axes.

    Only single-axis transitions couple at dipole order: the per-axis
    matrix element carries Kronecker factors on the spectator axes, so a
    simultaneous change of two or more axes gives rate zero.
    """
    pol = np.asarray(polarization, dtype=float)
    if abs(np.linalg.norm(pol) - 1.0) > 1e-8:
        raise ValueError("polarization must be a unit 3-vector")
    H = swanson_H(s, basis)
    pair = swanson_observables(s, basis)
    metric = pair.metric
    _, mu = swanson_h(s, basis)
    energies = _energies(H, metric)
    trusted = _trusted_window(basis)
    for lv in (*levels_i, *levels_j):
        if not 0 <= lv < trusted:
            raise ValueError(f"axis level {lv} outside the trusted window < {trusted}")

    omega_ij = float(sum(energies[a] - energies[b] for a, b in zip(levels_i, levels_j)))
    changed = [r for r in range(3) if levels_i[r] != levels_j[r]]
    if len(changed) > 1:
        # spectator Kronecker factors vanish: selection rule
        return TransitionResult(
            i=levels_i[changed[0]], j=levels_j[changed[0]], omega_ij=omega_ij,
            element=0.0, rate=0.0, route=route, effective_mass=mu,
        )
    if len(changed) == 1:
        r = changed[0]
        element = pol[r] * transition_element(
            H, levels_i[r], levels_j[r], pair, metric, route
        )
        rep_i, rep_j = levels_i[r], levels_j[r]
    else:
        element = sum(
            pol[r] * transition_element(H, levels_i[r], levels_i[r], pair, metric, route)
            for r in range(3)
        )
        rep_i = rep_j = levels_i[0]
    amp = pulse.spectral_amplitude(omega_ij)
    rate = 2.0 * np.pi * amp**2 * (e_charge**2 / mu**2) * abs(element) ** 2
    return TransitionResult(
        i=rep_i, j=rep_j, omega_ij=omega_ij, element=complex(element),
        rate=rate, route=route, effective_mass=mu,
    )
