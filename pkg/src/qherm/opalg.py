"""Truncated harmonic-oscillator (Fock) basis operator algebra.

Everything downstream works with dense complex matrices expressed in the
number basis of a reference oscillator.  Composite operators are always
formed by multiplying the truncated ladder matrices, never by truncating
exact infinite-dimensional composites: that way operator identities hold
exactly except in a corner block of known width, which the ``margin``
mechanism of :func:`interior_norm` excludes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "BasisSpec",
    "OperatorMatrix",
    "StateVector",
    "build_ladder",
    "build_xp",
    "interior_norm",
    "herm_expm",
    "general_expm",
    "eig_general",
    "eig_hermitian",
]

HERMITICITY_TOL = 1e-10
# pre-guard for general_expm; genuine overflow is caught by the finiteness
# check on the result (non-normal inputs can carry large but harmless
# nilpotent-like corner blocks, so the norm alone is not disqualifying)
EXPM_NORM_LIMIT = 5.0e3


@dataclass(frozen=True)
class BasisSpec:
    """Truncation contract for the Fock-basis representation.

    dim is the number of retained oscillator levels; margin is the default
    number of top rows/columns excluded from interior-block residual checks.
    hbar is pinned to 1 (it only ever reappears in rate prefactors).
    """

    dim: int
    margin: int = 0
    hbar: float = field(default=1.0)

    def __post_init__(self):
        if self.dim < 8:
            raise ValueError(f"basis dim must be >= 8, got {self.dim}")
        if not 0 <= self.margin < self.dim / 2:
            raise ValueError(
                f"margin must satisfy 0 <= margin < dim/2, got {self.margin} for dim {self.dim}"
            )
        if self.hbar != 1.0:
            raise ValueError("this toolkit fixes hbar = 1")


class OperatorMatrix:
    """Dense complex square matrix tagged with its basis.

    Supports the small amount of operator algebra the toolkit needs:
    products, sums, scalar multiples, adjoints and commutators.  Products
    between operators living in different bases are rejected.
    """

    __slots__ = ("entries", "basis")

    def __init__(self, entries: np.ndarray, basis: BasisSpec):
        entries = np.asarray(entries, dtype=complex)
        if entries.shape != (basis.dim, basis.dim):
            raise ValueError(
                f"entries shape {entries.shape} does not match basis dim {basis.dim}"
            )
        self.entries = entries
        self.basis = basis

    # -- algebra ---------------------------------------------------------
    def _check_basis(self, other: "OperatorMatrix") -> None:
        if self.basis != other.basis:
            raise ValueError("operators live in different bases")

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check_basis(other)
            return OperatorMatrix(self.entries @ other.entries, self.basis)
        if isinstance(other, StateVector):
            if self.basis != other.basis:
                raise ValueError("operator and state live in different bases")
            return StateVector(self.entries @ other.amplitudes, self.basis)
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        self._check_basis(other)
        return OperatorMatrix(self.entries + other.entries, self.basis)

    def __sub__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        self._check_basis(other)
        return OperatorMatrix(self.entries - other.entries, self.basis)

    def __mul__(self, scalar):
        return OperatorMatrix(self.entries * scalar, self.basis)

    __rmul__ = __mul__

    def __neg__(self):
        return OperatorMatrix(-self.entries, self.basis)

    @property
    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, self.basis)

    def commutator(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_basis(other)
        a, b = self.entries, other.entries
        return OperatorMatrix(a @ b - b @ a, self.basis)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    @classmethod
    def identity(cls, basis: BasisSpec) -> "OperatorMatrix":
        return cls(np.eye(basis.dim, dtype=complex), basis)

    @classmethod
    def zeros(cls, basis: BasisSpec) -> "OperatorMatrix":
        return cls(np.zeros((basis.dim, basis.dim), dtype=complex), basis)

    def __repr__(self):
        return f"OperatorMatrix(dim={self.basis.dim})"


class StateVector:
    """Complex amplitude vector tagged with its basis."""

    __slots__ = ("amplitudes", "basis")

    def __init__(self, amplitudes: np.ndarray, basis: BasisSpec):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.shape != (basis.dim,):
            raise ValueError(
                f"amplitude shape {amplitudes.shape} does not match basis dim {basis.dim}"
            )
        self.amplitudes = amplitudes
        self.basis = basis

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.basis)

    def inner(self, other: "StateVector") -> complex:
        if self.basis != other.basis:
            raise ValueError("states live in different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    @classmethod
    def fock(cls, basis: BasisSpec, n: int) -> "StateVector":
        if not 0 <= n < basis.dim:
            raise ValueError(f"Fock index {n} outside basis of dim {basis.dim}")
        amp = np.zeros(basis.dim, dtype=complex)
        amp[n] = 1.0
        return cls(amp, basis)

    def __repr__(self):
        return f"StateVector(dim={self.basis.dim})"


def fix_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate a vector so its largest-magnitude component is real positive."""
    k = int(np.argmax(np.abs(vec)))
    ph = vec[k]
    if ph == 0:
        return vec
    return vec * (abs(ph) / ph)


def build_ladder(basis: BasisSpec) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Annihilation and creation matrices: a[n, n+1] = sqrt(n+1)."""
    a = np.zeros((basis.dim, basis.dim), dtype=complex)
    ns = np.arange(basis.dim - 1)
    a[ns, ns + 1] = np.sqrt(ns + 1.0)
    return OperatorMatrix(a, basis), OperatorMatrix(a.T.copy(), basis)


def build_xp(
    basis: BasisSpec, mass: float, freq: float
) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Position and momentum matrices of the (mass, freq) oscillator.

    x = (a + a^dag)/sqrt(2 mass freq), p = i sqrt(mass freq / 2)(a^dag - a).
    Both are Hermitian as matrices for any truncation.
    """
    if mass <= 0 or freq <= 0:
        raise ValueError(f"mass and freq must be positive, got {mass}, {freq}")
    a, ad = build_ladder(basis)
    x = (1.0 / np.sqrt(2.0 * mass * freq)) * (a + ad)
    p = 1j * np.sqrt(mass * freq / 2.0) * (ad - a)
    return x, p


def _as_array(M) -> np.ndarray:
    return M.entries if isinstance(M, OperatorMatrix) else np.asarray(M)


def interior_norm(M, margin: int) -> float:
    """Max-abs entry of the leading (dim-margin) x (dim-margin) block.

    All residual checks in the toolkit go through here so that the
    truncation-corrupted top rows/columns can be excluded uniformly.
    """
    arr = _as_array(M)
    n = arr.shape[0]
    if not 0 <= margin < n / 2:
        raise ValueError(f"margin must satisfy 0 <= margin < dim/2, got {margin}")
    k = n - margin
    return float(np.abs(arr[:k, :k]).max())


def herm_expm(Q: OperatorMatrix, scale: float = 1.0) -> OperatorMatrix:
    """exp(scale * Q) of a Hermitian Q via eigendecomposition.

    The result is Hermitian and positive definite for real scale.  Rejects
    inputs whose Hermiticity defect exceeds 1e-10.
    """
    defect = Q.hermiticity_defect()
    if defect > HERMITICITY_TOL:
        raise ValueError(
            f"herm_expm requires a Hermitian matrix; measured asymmetry {defect:.3e}"
        )
    w, V = np.linalg.eigh((Q.entries + Q.entries.conj().T) / 2.0)
    out = (V * np.exp(scale * w)) @ V.conj().T
    out = (out + out.conj().T) / 2.0
    return OperatorMatrix(out, Q.basis)


def general_expm(M: OperatorMatrix) -> OperatorMatrix:
    """Matrix exponential by scaling-and-squaring with a Pade core.

    Delegates to scipy.linalg.expm, which implements exactly that
    algorithm; the wrapper adds the norm guard and basis tagging.
    """
    arr = M.entries
    if not np.all(np.isfinite(arr)):
        raise ValueError("general_expm requires finite entries")
    nrm = float(np.linalg.norm(arr, 2))
    if nrm > EXPM_NORM_LIMIT:
        raise OverflowError(
            f"general_expm: spectral norm {nrm:.1f} exceeds the double-precision "
            f"limit {EXPM_NORM_LIMIT}"
        )
    out = scipy.linalg.expm(arr)
    if not np.all(np.isfinite(out)):
        raise OverflowError("general_expm overflowed for this input")
    return OperatorMatrix(out, M.basis)


def _sort_key(w: np.ndarray) -> np.ndarray:
    return np.lexsort((w.imag, w.real))


def eig_general(M: OperatorMatrix) -> list[tuple[complex, StateVector]]:
    """Full right-eigensystem of a general matrix.

    Pairs are sorted by ascending real part (imaginary part breaks ties);
    each vector is Euclidean-normalized with its largest-magnitude
    component rotated to the positive real axis.
    """
    arr = M.entries
    if not np.all(np.isfinite(arr)):
        raise ValueError("eig_general requires finite entries")
    try:
        w, V = np.linalg.eig(arr)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"eigensolver did not converge: {exc}") from exc
    order = _sort_key(w)
    out = []
    for k in order:
        v = fix_phase(V[:, k] / np.linalg.norm(V[:, k]))
        out.append((complex(w[k]), StateVector(v, M.basis)))
    return out


def eig_hermitian(M: OperatorMatrix) -> tuple[np.ndarray, list[StateVector]]:
    """Real spectrum and orthonormal eigenvectors of a Hermitian matrix.

    Same sorting and phase convention as eig_general.
    """
    defect = M.hermiticity_defect()
    if defect > HERMITICITY_TOL:
        raise ValueError(
            f"eig_hermitian requires a Hermitian matrix; measured asymmetry {defect:.3e}"
        )
    w, V = np.linalg.eigh((M.entries + M.entries.conj().T) / 2.0)
    vecs = [StateVector(fix_phase(V[:, k]), M.basis) for k in range(len(w))]
    return w, vecs
