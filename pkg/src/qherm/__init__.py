"""qherm: quasi-Hermitian oscillator toolkit.

Represents non-Hermitian Hamiltonians with real spectra in a truncated
Fock basis, constructs their metric operators and physical observables,
couples them to the electromagnetic field by minimal substitution in the
observables, and computes transition matrix elements and rates, checking
each operator identity numerically along the way.
"""

__version__ = "0.1.0"

from .opalg import (
    BasisSpec,
    OperatorMatrix,
    StateVector,
    build_ladder,
    build_xp,
    eig_general,
    eig_hermitian,
    general_expm,
    herm_expm,
    interior_norm,
)
from .nhqcore import (
    MetricPackage,
    ObservablePair,
    PositionGrid,
    Provenance,
    eta_inner,
    matrix_element,
    metric_from_Q,
    observable_from,
    position_wavefunction,
    probability_density,
    quasi_hermiticity_residual,
    similarity_transform,
    state_from_hermitian,
    to_hermitian,
)
from .models import (
    CubicSpec,
    MetricCase,
    SpectrumReport,
    SwansonSpec,
    cubic_H,
    cubic_XP_series,
    cubic_first_order_states,
    cubic_h_series,
    cubic_metric,
    spectrum,
    swanson_H,
    swanson_h,
    swanson_metric,
    swanson_observables,
)
from .gaugeem import (
    PlaneWave,
    PolyFn,
    PulseSpec,
    Route,
    TransitionResult,
    dipole_identity_residual,
    function_of_X,
    gauge_covariance_residual,
    linear_coupling,
    minimal_substitution,
    phase_transform,
    transition_element,
    transition_rate,
    transition_rate_3d,
)
from .pertoracle import PerturbationProblem, rs_energy2, rs_state1
