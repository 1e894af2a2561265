"""Metric packages, similarity maps, weighted inner products, densities."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qherm import (
    BasisSpec,
    CubicSpec,
    OperatorMatrix,
    PositionGrid,
    Provenance,
    StateVector,
    build_xp,
    cubic_H,
    cubic_metric,
    eta_inner,
    matrix_element,
    metric_from_Q,
    observable_from,
    position_wavefunction,
    probability_density,
    quasi_hermiticity_residual,
    state_from_hermitian,
    swanson_H,
    to_hermitian,
)
from qherm import cubic_XP_series, eig_general, interior_norm
from qherm.nhqcore import observable_residual


# -- metric packages ---------------------------------------------------------

def test_trivial_metric(basis16):
    m = metric_from_Q(OperatorMatrix.zeros(basis16), Provenance.exact())
    eye = np.eye(16)
    assert np.abs(m.eta.entries - eye).max() < 1e-14
    assert np.abs(m.rho.entries - eye).max() < 1e-14
    m.validate()


def test_metric_rejects_nonhermitian(basis16):
    arr = np.zeros((16, 16), dtype=complex)
    arr[0, 1] = 1.0
    with pytest.raises(ValueError, match="asymmetry"):
        metric_from_Q(OperatorMatrix(arr, basis16), Provenance.exact())


def test_swanson_case_i_semigroup(metric_i):
    # contraction side: the dense product identity rho rho = eta is clean
    d = np.abs(metric_i.rho.entries @ metric_i.rho.entries - metric_i.eta.entries)
    assert d.max() < 1e-10


def test_metric_validate_both_cases(metric_i, metric_ii):
    for m in (metric_i, metric_ii):
        res = m.validate()
        assert res["eta_min_eigenvalue"] > 0


def test_cubic_metric_positive_definite(basis64):
    m = cubic_metric(CubicSpec(g=0.02), basis64)
    res = m.validate()
    assert res["eta_min_eigenvalue"] > 0
    assert res["rho_rhoinv_minus_I"] < 1e-10
    assert res["rho_rho_minus_eta"] < 1e-12


def test_provenance_repr():
    assert str(Provenance.exact()) == "Exact"
    assert str(Provenance.perturbative(1)) == "PerturbativeOrder(1)"
    with pytest.raises(ValueError):
        Provenance.perturbative(0)


# -- quasi-Hermiticity -------------------------------------------------------

def test_residual_vanishes_for_hermitian(basis32):
    x, p = build_xp(basis32, 1.0, 1.0)
    H = 0.5 * (p @ p + x @ x)
    m = metric_from_Q(OperatorMatrix.zeros(basis32), Provenance.exact())
    assert quasi_hermiticity_residual(H, m, 4) < 1e-14


def test_swanson_quasi_hermiticity(swanson_i, swanson_ii, basis64, metric_i, metric_ii):
    for s, m in ((swanson_i, metric_i), (swanson_ii, metric_ii)):
        H = swanson_H(s, basis64)
        assert quasi_hermiticity_residual(H, m, 6) < 1e-10


def test_cubic_quasi_hermiticity_order(basis64, cubic_gs, loglog_fit):
    residuals = []
    for g in cubic_gs:
        c = CubicSpec(g=g)
        residuals.append(
            quasi_hermiticity_residual(cubic_H(c, basis64), cubic_metric(c, basis64), 9)
        )
    assert loglog_fit(cubic_gs, residuals) >= 2.7


# -- similarity maps ---------------------------------------------------------

def test_to_hermitian_trivial(basis32):
    x, p = build_xp(basis32, 1.0, 1.0)
    H = 0.5 * (p @ p + x @ x)
    m = metric_from_Q(OperatorMatrix.zeros(basis32), Provenance.exact())
    assert interior_norm(to_hermitian(H, m) - H, 4) < 1e-14


def test_to_hermitian_swanson_cases(swanson_i, swanson_ii, basis64, metric_i, metric_ii):
    x, p = build_xp(basis64, 1.0, 1.0)
    for s, m, mu in ((swanson_i, metric_i, 1.0), (swanson_ii, metric_ii, 0.84)):
        h = to_hermitian(swanson_H(s, basis64), m)
        target = (1.0 / (2 * mu)) * (p @ p) + (0.5 * mu) * (x @ x)
        assert interior_norm(h - target, 8) < 1e-9


def test_observable_from_closed_forms(swanson_i, swanson_ii, basis64, metric_i, metric_ii):
    x, p = build_xp(basis64, 1.0, 1.0)
    eps = 0.4
    # trivial metric: X = x
    m0 = metric_from_Q(OperatorMatrix.zeros(basis64), Provenance.exact())
    assert interior_norm(observable_from(x, m0) - x, 8) == 0.0
    # case (ii): X = x + i eps p / (m2 w)
    X = observable_from(x, metric_ii)
    assert interior_norm(X - (x + (1j * eps / 0.84) * p), 8) < 1e-10
    # case (i): P = p + i eps m1 w x
    P = observable_from(p, metric_i)
    assert interior_norm(P - (p + (1j * eps) * x), 8) < 1e-10


def test_observable_quasi_hermiticity_exact(pair_i, pair_ii):
    for pair in (pair_i, pair_ii):
        assert observable_residual(pair.X, pair.metric, 8) < 1e-10
        assert observable_residual(pair.P, pair.metric, 8) < 1e-10


def test_observable_realness(pair_i, pair_ii, basis64):
    # spectra of X and P are real on the lower half for exact metrics;
    # "lower" means closest to zero, where truncation has no bite
    for pair in (pair_i, pair_ii):
        for A in (pair.X, pair.P):
            vals = np.array([w for w, _ in eig_general(A)])
            order = np.argsort(np.abs(vals.real))
            inner = vals[order[: len(vals) // 2]]
            assert np.abs(inner.imag).max() < 1e-8


def test_observable_series_order_cubic(basis64, cubic_gs, loglog_fit):
    # the quasi-Hermiticity of the printed series holds to the series order
    residuals = []
    for g in cubic_gs:
        pair = cubic_XP_series(CubicSpec(g=g), basis64)
        residuals.append(observable_residual(pair.X, pair.metric, 12))
    assert loglog_fit(cubic_gs, residuals) >= 2.7


# -- states and inner products ------------------------------------------------

def test_state_map_trivial(basis16):
    m = metric_from_Q(OperatorMatrix.zeros(basis16), Provenance.exact())
    phi = StateVector.fock(basis16, 1)
    assert np.array_equal(state_from_hermitian(phi, m).amplitudes, phi.amplitudes)


def test_state_map_isometry_fock(metric_i, metric_ii, basis64):
    # case (ii) sits at its conditioning floor slightly above 1e-10
    for m, tol in ((metric_i, 1e-10), (metric_ii, 1e-9)):
        for n in range(4):
            phi = StateVector.fock(basis64, n)
            psi = state_from_hermitian(phi, m)
            assert abs(eta_inner(psi, psi, m) - 1.0) < tol


def test_state_map_isometry_random_interior(metric_i, metric_ii, basis64):
    # trusted-window states: the float isometry defect stays tiny there
    rng = np.random.default_rng(11)
    for m, tol in ((metric_i, 1e-10), (metric_ii, 1e-8)):
        for _ in range(4):
            ua = np.zeros(64, dtype=complex)
            va = np.zeros(64, dtype=complex)
            ua[:8] = rng.normal(size=8) + 1j * rng.normal(size=8)
            va[:8] = rng.normal(size=8) + 1j * rng.normal(size=8)
            u, v = StateVector(ua, basis64), StateVector(va, basis64)
            pu = state_from_hermitian(u, m)
            pv = state_from_hermitian(v, m)
            err = abs(eta_inner(pu, pv, m) - u.inner(v)) / (u.norm() * v.norm())
            assert err < tol


def test_mapped_ground_state_is_H_eigenvector(swanson_i, basis64, metric_i):
    H = swanson_H(swanson_i, basis64)
    psi0 = state_from_hermitian(StateVector.fock(basis64, 0), metric_i)
    nrm = np.sqrt(abs(eta_inner(psi0, psi0, metric_i)))
    psi0 = StateVector(psi0.amplitudes / nrm, basis64)
    # physical-norm energy consistency
    e = matrix_element(psi0, H, psi0, metric_i)
    assert abs(e - 0.5) < 1e-8
    # and the general eigensolver agrees on the eigenvalue
    w0 = eig_general(H)[0][0]
    assert abs(w0 - 0.5) < 1e-8


def test_eta_orthonormality(metric_i, basis64):
    psi0 = state_from_hermitian(StateVector.fock(basis64, 0), metric_i)
    psi1 = state_from_hermitian(StateVector.fock(basis64, 1), metric_i)
    assert abs(eta_inner(psi0, psi1, metric_i)) < 1e-10
    assert abs(eta_inner(psi0, psi0, metric_i) - 1.0) < 1e-10


def test_matrix_element_identity_and_momentum(swanson_i, basis64, metric_i, pair_i):
    psi0 = state_from_hermitian(StateVector.fock(basis64, 0), metric_i)
    psi1 = state_from_hermitian(StateVector.fock(basis64, 1), metric_i)
    eye = OperatorMatrix.identity(basis64)
    assert abs(matrix_element(psi0, eye, psi0, metric_i) - 1.0) < 1e-10
    # <psi0| eta P |psi1> = <phi0| p |phi1> = -i sqrt(m1 w / 2)
    me = matrix_element(psi0, pair_i.P, psi1, metric_i)
    assert abs(me - (-1j / np.sqrt(2.0))) < 1e-9


def test_cubic_expectation_reality(basis64):
    g = 0.02
    c = CubicSpec(g=g)
    m = cubic_metric(c, basis64)
    pair = cubic_XP_series(c, basis64)
    psi0 = eig_general(cubic_H(c, basis64))[0][1]
    nrm = np.sqrt(abs(eta_inner(psi0, psi0, m)))
    psi0 = StateVector(psi0.amplitudes / nrm, basis64)
    val = matrix_element(psi0, pair.X, psi0, m)
    assert abs(val.imag) < 2.0 * g**3


# -- position representation --------------------------------------------------

def test_wavefunction_ground_state_peak(basis64):
    grid = PositionGrid.uniform(-8.0, 8.0, 0.01)
    phi0 = StateVector.fock(basis64, 0)
    wave = position_wavefunction(phi0, grid, 1.0, 1.0)
    mid = len(grid.points) // 2
    assert abs(wave[mid] - np.pi ** -0.25) < 1e-12


def test_wavefunction_first_excited_node(basis64):
    grid = PositionGrid.uniform(-8.0, 8.0, 0.01)
    phi1 = StateVector.fock(basis64, 1)
    wave = position_wavefunction(phi1, grid, 1.0, 1.0)
    mid = len(grid.points) // 2  # grid point within 1e-12 of the origin
    assert abs(wave[mid]) < 1e-12


def test_wavefunction_normalization_quadrature(basis64):
    grid = PositionGrid.uniform(-8.0, 8.0, 0.01)
    phi0 = StateVector.fock(basis64, 0)
    wave = position_wavefunction(phi0, grid, 1.0, 1.0)
    assert abs(grid.quadrature(np.abs(wave) ** 2) - 1.0) < 1e-8


def test_wavefunction_grid_guard(basis16):
    grid = PositionGrid.uniform(-50.0, 50.0, 0.5)
    with pytest.raises(ValueError, match="support"):
        position_wavefunction(StateVector.fock(basis16, 0), grid, 1.0, 1.0)


def test_density_trivial_metric(basis64):
    m = metric_from_Q(OperatorMatrix.zeros(basis64), Provenance.exact())
    grid = PositionGrid.uniform(-8.0, 8.0, 0.01)
    psi = StateVector.fock(basis64, 2)
    dens = probability_density(psi, m, grid, 1.0, 1.0)
    wave = position_wavefunction(psi, grid, 1.0, 1.0)
    assert np.abs(dens - np.abs(wave) ** 2).max() < 1e-14


def test_density_quadrature_matches_eta_norm(swanson_i, basis64, metric_i):
    grid = PositionGrid.uniform(-8.0, 8.0, 0.01)
    psi0 = state_from_hermitian(StateVector.fock(basis64, 0), metric_i)
    dens = probability_density(psi0, metric_i, grid, 1.0, 1.0)
    total = eta_inner(psi0, psi0, metric_i).real
    assert abs(grid.quadrature(dens) - total) < 1e-6


def test_grid_validation():
    with pytest.raises(ValueError):
        PositionGrid(points=np.array([1.0, 0.5]), weights=np.array([0.1, 0.1]))
    with pytest.raises(ValueError):
        PositionGrid(points=np.array([0.0, 1.0]), weights=np.array([0.1, -0.1]))


def test_picture_equivalence_for_observables(basis64, pair_i, pair_ii):
    # <psi_i| eta A |psi_j> = <phi_i| a |phi_j> for A in {X, P}, i,j <= 5;
    # the momentum-type metric amplifies the eigendecomposition noise floor
    # of eta, which caps the resolvable agreement near 1e-8 for case (ii)
    x, p = build_xp(basis64, 1.0, 1.0)
    for pair, tol in ((pair_i, 1e-9), (pair_ii, 2e-8)):
        m = pair.metric
        psis, phis = [], []
        for n in range(6):
            phi = StateVector.fock(basis64, n)
            psi = state_from_hermitian(phi, m)
            nrm = np.sqrt(abs(eta_inner(psi, psi, m)))
            psis.append(StateVector(psi.amplitudes / nrm, basis64))
            phis.append(phi)
        worst = 0.0
        for A, a in ((pair.X, x), (pair.P, p)):
            for i in range(6):
                for j in range(6):
                    lhs = matrix_element(psis[i], A, psis[j], m)
                    rhs = complex(np.vdot(phis[i].amplitudes, a.entries @ phis[j].amplitudes))
                    worst = max(worst, abs(lhs - rhs))
        assert worst < tol


# -- rewriting identity --------------------------------------------------------

def test_hamiltonian_rewriting_swanson(swanson_i, swanson_ii, basis64, pair_i, pair_ii):
    # H(x, p) equals the equivalent-oscillator polynomial evaluated on (X, P)
    for s, pair, mu in ((swanson_i, pair_i, 1.0), (swanson_ii, pair_ii, 0.84)):
        H = swanson_H(s, basis64)
        hXP = (1.0 / (2 * mu)) * (pair.P @ pair.P) + (0.5 * mu) * (pair.X @ pair.X)
        assert interior_norm(H - hXP, 8) < 1e-9


# -- properties ----------------------------------------------------------------

@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_isometry_property_small_metric(seed):
    rng = np.random.default_rng(seed)
    basis = BasisSpec(dim=16, margin=2)
    x, _ = build_xp(basis, 1.0, 1.0)
    m = metric_from_Q(0.05 * (x @ x), Provenance.exact())
    u = StateVector(rng.normal(size=16) + 1j * rng.normal(size=16), basis)
    v = StateVector(rng.normal(size=16) + 1j * rng.normal(size=16), basis)
    pu, pv = state_from_hermitian(u, m), state_from_hermitian(v, m)
    err = abs(eta_inner(pu, pv, m) - u.inner(v)) / (u.norm() * v.norm())
    assert err < 1e-10
