"""
Dense complex linear algebra and quantum-state primitives.

Conventions used everywhere in densitylab:

* hbar = 1, so energies and inverse times share units.
* Tensor products put the first factor on the major index:
  ``tensor(|0>, |1>)`` is basis vector 1 of dimension 4.
* Values are immutable once built; the underlying arrays are read-only.
"""
import logging
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from django.conf import settings
from scipy.linalg import sqrtm
from scipy.stats import unitary_group

from .exceptions import (
    DimensionLimitExceeded,
    DimensionMismatch,
    InvalidState,
    InvalidWeights,
    KindMismatch,
    NotHermitian,
)

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12
TRACE_TOL = 1e-10
EIGEN_FLOOR = -1e-10
IMAG_TOL = 1e-10


def max_dimension():
    if settings.configured:
        return getattr(settings, "DENSITYLAB_MAX_DIM", 1024)
    return 1024


def _readonly(values, ndim):
    array = np.array(values, dtype=complex)
    if array.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-d array, got shape {array.shape}")
    if array.shape[0] < 1:
        raise DimensionMismatch("dimension must be at least 1")
    if array.shape[0] > max_dimension():
        raise DimensionLimitExceeded(
            f"dimension {array.shape[0]} exceeds the limit {max_dimension()}"
        )
    array.setflags(write=False)
    return array


def _square(values):
    array = _readonly(values, 2)
    if array.shape[0] != array.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got shape {array.shape}")
    return array


def _hermitian_error(array):
    return float(np.max(np.abs(array - array.conj().T)))


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense d x d complex matrix (observables, Hamiltonians, unitaries)."""

    entries: np.ndarray
    hermitian_flag: bool = field(init=False)

    def __post_init__(self):
        array = _square(self.entries)
        object.__setattr__(self, "entries", array)
        object.__setattr__(self, "hermitian_flag", _hermitian_error(array) <= HERMITIAN_TOL)

    @property
    def dim(self):
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    def dagger(self):
        return Operator(self.entries.conj().T)

    def norm(self):
        """Spectral norm."""
        return float(np.linalg.norm(self.entries, ord=2))

    def is_unitary(self, tol=1e-10):
        product = self.entries.conj().T @ self.entries
        return float(np.max(np.abs(product - np.eye(self.dim)))) <= tol

    def require_hermitian(self, what="operator"):
        if not self.hermitian_flag:
            raise NotHermitian(
                f"{what} is not Hermitian (max deviation {_hermitian_error(self.entries):.3e})"
            )
        return self

    def _check_dim(self, other):
        if other.dim != self.dim:
            raise DimensionMismatch(f"dimensions differ: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        self._check_dim(other)
        return Operator(self.entries + other.entries)

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        self._check_dim(other)
        return Operator(self.entries - other.entries)

    def __mul__(self, scalar):
        if isinstance(scalar, (Operator, PureState, DensityMatrix)):
            return NotImplemented
        return Operator(self.entries * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check_dim(other)
            return Operator(self.entries @ other.entries)
        if isinstance(other, PureState):
            self._check_dim(other)
            return self.entries @ other.amplitudes
        return NotImplemented

    def __repr__(self):
        return f"Operator(dim={self.dim}, hermitian={self.hermitian_flag})"


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        vector = _readonly(self.amplitudes, 1)
        norm = float(np.linalg.norm(vector))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidState(f"state vector has norm {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", vector)

    @classmethod
    def from_vector(cls, values):
        """Normalize ``values`` and wrap them."""
        vector = np.asarray(values, dtype=complex)
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise InvalidState("cannot normalize the zero vector")
        return cls(vector / norm)

    @property
    def dim(self):
        return self.amplitudes.shape[0]

    def overlap(self, other):
        """<self|other>."""
        if other.dim != self.dim:
            raise DimensionMismatch(f"dimensions differ: {self.dim} vs {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self):
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self):
        return f"PureState(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, trace-one matrix."""

    entries: np.ndarray

    def __post_init__(self):
        array = _square(self.entries)
        deviation = _hermitian_error(array)
        if deviation > HERMITIAN_TOL:
            raise InvalidState(f"density matrix is not Hermitian (deviation {deviation:.3e})")
        trace = complex(np.trace(array))
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvalidState(f"density matrix has trace {trace!r}, expected 1")
        lowest = float(np.linalg.eigvalsh(array)[0])
        if lowest < EIGEN_FLOOR:
            raise InvalidState(f"density matrix has negative eigenvalue {lowest:.3e}")
        object.__setattr__(self, "entries", array)

    @classmethod
    def from_matrix(cls, values):
        """Hermitize numerical noise away before validating."""
        array = np.asarray(values, dtype=complex)
        return cls((array + array.conj().T) / 2)

    @classmethod
    def maximally_mixed(cls, dim):
        return cls(np.eye(dim) / dim)

    @property
    def dim(self):
        return self.entries.shape[0]

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.entries)

    def is_pure(self, tol=1e-10):
        return float(np.max(np.abs(self.entries @ self.entries - self.entries))) <= tol

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


def as_density(state):
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.projector()
    raise KindMismatch(f"expected a PureState or DensityMatrix, got {type(state).__name__}")


# ---------------------------------------------------------------------------
# Core operations


def tensor(a, b):
    """Kronecker product of two operators, two states or two density matrices."""
    if type(a) is not type(b):
        raise KindMismatch(
            f"cannot tensor {type(a).__name__} with {type(b).__name__}"
        )
    if isinstance(a, Operator):
        return Operator(np.kron(a.entries, b.entries))
    if isinstance(a, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix):
        return DensityMatrix.from_matrix(np.kron(a.entries, b.entries))
    raise KindMismatch(f"cannot tensor {type(a).__name__}")


def partial_trace(rho, dims, keep):
    """
    Reduced density matrix of factor ``keep`` (1 or 2) of a d1 x d2 system.
    """
    rho = as_density(rho)
    d1, d2 = (int(d) for d in dims)
    if d1 * d2 != rho.dim:
        raise DimensionMismatch(f"dims {d1}x{d2} do not factor dimension {rho.dim}")
    blocks = rho.entries.reshape(d1, d2, d1, d2)
    if keep == 1:
        reduced = np.einsum("ijkj->ik", blocks)
    elif keep == 2:
        reduced = np.einsum("ijil->jl", blocks)
    else:
        raise DimensionMismatch(f"keep must be 1 or 2, got {keep!r}")
    return DensityMatrix.from_matrix(reduced)


def expectation(rho, a):
    """tr(rho A) for Hermitian A."""
    rho = as_density(rho)
    a.require_hermitian("observable")
    if a.dim != rho.dim:
        raise DimensionMismatch(f"observable has dim {a.dim}, state has dim {rho.dim}")
    value = complex(np.einsum("ij,ji->", rho.entries, a.entries))
    if abs(value.imag) > IMAG_TOL:
        raise NotHermitian(f"tr(rho A) has imaginary part {value.imag:.3e}")
    return value.real


def eig_hermitian(a):
    """Ascending eigenvalues and orthonormal eigenvector columns."""
    a.require_hermitian()
    values, vectors = np.linalg.eigh(a.entries)
    return values, vectors


def mix(components):
    """sum_a w_a |phi_a><phi_a| for ``components`` = [(PureState, weight), ...]."""
    if not components:
        raise InvalidWeights("a mixture needs at least one component")
    weights = np.array([float(w) for _, w in components])
    if np.any(weights < 0):
        raise InvalidWeights(f"negative weight in {weights.tolist()}")
    if abs(weights.sum() - 1.0) > NORM_TOL:
        raise InvalidWeights(f"weights sum to {weights.sum()!r}, expected 1")
    dim = components[0][0].dim
    total = np.zeros((dim, dim), dtype=complex)
    for (state, _), weight in zip(components, weights):
        if state.dim != dim:
            raise DimensionMismatch(f"component dims differ: {dim} vs {state.dim}")
        total += weight * np.outer(state.amplitudes, state.amplitudes.conj())
    return DensityMatrix.from_matrix(total)


# ---------------------------------------------------------------------------
# Distances


def trace_distance(rho, sigma):
    """Half the trace norm of rho - sigma."""
    left = as_density(rho).entries
    right = as_density(sigma).entries
    if left.shape != right.shape:
        raise DimensionMismatch(f"shapes differ: {left.shape} vs {right.shape}")
    difference = left - right
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((difference + difference.conj().T) / 2))))


def fidelity(rho, sigma):
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; exact overlap for pure states."""
    if isinstance(sigma, PureState):
        rho, sigma = sigma, rho
    if isinstance(rho, PureState):
        sigma = as_density(sigma)
        value = np.vdot(rho.amplitudes, sigma.entries @ rho.amplitudes).real
        return float(min(max(value, 0.0), 1.0))
    root = sqrtm(as_density(rho).entries)
    inner = sqrtm(root @ as_density(sigma).entries @ root)
    return float(min(max(np.trace(inner).real ** 2, 0.0), 1.0))


def purity(rho):
    entries = as_density(rho).entries
    return float(np.einsum("ij,ji->", entries, entries).real)


# ---------------------------------------------------------------------------
# Constructors

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(label):
    """Pauli string operator, e.g. ``pauli("Z")`` or ``pauli("XZ")`` (first letter major)."""
    try:
        matrices = [PAULI[letter] for letter in label.upper()]
    except KeyError as exc:
        raise KindMismatch(f"unknown Pauli letter in {label!r}") from exc
    return Operator(reduce(np.kron, matrices))


def pauli_sum(coefficients):
    """Operator from a ``{"ZI": 1.0, "XX": 0.5}`` coefficient map."""
    labels = list(coefficients)
    if not labels:
        raise KindMismatch("empty Pauli coefficient map")
    width = len(labels[0])
    total = np.zeros((2 ** width, 2 ** width), dtype=complex)
    for label, coefficient in coefficients.items():
        if len(label) != width:
            raise DimensionMismatch(f"Pauli labels of different lengths: {labels}")
        total += complex(coefficient) * pauli(label).entries
    return Operator(total)


def basis_state(index, dim):
    vector = np.zeros(dim, dtype=complex)
    vector[index] = 1.0
    return PureState(vector)


def bloch_state(vector):
    """Pure qubit state with unit Bloch vector ``vector``."""
    x, y, z = (float(v) for v in vector)
    length = np.sqrt(x * x + y * y + z * z)
    if abs(length - 1.0) > 1e-9:
        raise InvalidState(f"Bloch vector of a pure state must have length 1, got {length!r}")
    x, y, z = x / length, y / length, z / length
    if z <= -1.0 + 1e-15:
        return basis_state(1, 2)
    return PureState.from_vector([1.0 + z, x + 1j * y])


def bloch_density(vector):
    """(I + r.sigma)/2 for |r| <= 1."""
    x, y, z = (float(v) for v in vector)
    entries = 0.5 * (PAULI["I"] + x * PAULI["X"] + y * PAULI["Y"] + z * PAULI["Z"])
    return DensityMatrix.from_matrix(entries)


def bloch_vector(rho):
    rho = as_density(rho)
    if rho.dim != 2:
        raise DimensionMismatch(f"Bloch vector needs a qubit, got dim {rho.dim}")
    return np.array([expectation(rho, pauli(letter)) for letter in "XYZ"])


def bell_state():
    """(|00> + |11>)/sqrt(2)."""
    return PureState.from_vector([1, 0, 0, 1])


def schmidt_state(coefficients, left=None, right=None):
    """
    sum_i c_i |psi_i>|phi_i> from coefficients and two lists of orthonormal
    states (computational bases by default).
    """
    coefficients = np.asarray(coefficients, dtype=complex)
    count = coefficients.shape[0]
    left = left or [basis_state(i, count) for i in range(count)]
    right = right or [basis_state(i, count) for i in range(count)]
    total = sum(
        c * np.kron(psi.amplitudes, phi.amplitudes)
        for c, psi, phi in zip(coefficients, left, right)
    )
    return PureState.from_vector(total)


def random_state(dim, rng):
    vector = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState.from_vector(vector)


def random_density(dim, rng, rank=None):
    """Random density matrix from a Ginibre matrix of the given rank (full by default)."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    product = g @ g.conj().T
    return DensityMatrix.from_matrix(product / np.trace(product).real)


def random_hermitian(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return Operator((g + g.conj().T) / 2)


def random_unitary(dim, rng):
    return Operator(unitary_group.rvs(dim, random_state=rng))


# ---------------------------------------------------------------------------
# JSON codec: row-major nested lists of [re, im] pairs


def to_pairs(matrix):
    entries = matrix.entries if hasattr(matrix, "entries") else np.asarray(matrix)
    return [[[float(z.real), float(z.imag)] for z in row] for row in entries]


def from_pairs(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
