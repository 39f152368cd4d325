"""
Density-matrix reconstruction from measured expectation values.

Reconstruction is linear least squares over Hermitian, trace-one matrices
(solved in the traceless subspace around I/d, so the trace is exact),
followed by a projection onto the positive cone: eigenvalues are clipped
at zero and the trace renormalized. This is not the maximum-likelihood
estimate, but it always returns a valid density matrix.
"""
import logging
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.linalg import lstsq

from .exceptions import DimensionMismatch, IncompleteObservableSet, InvalidState
from .hilbert import DensityMatrix, Operator, expectation, pauli
from .protective import run_batch

logger = logging.getLogger(__name__)

SOURCES = ("exact", "simulated-noisy", "protective-simulated")
RANK_TOL = 1e-9


def _is_identity_label(label):
    return set(label) == {"I"}


@dataclass(frozen=True, eq=False)
class ObservableSet:
    dim: int
    labels: tuple
    observables: tuple
    informationally_complete: bool = False

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "observables", tuple(self.observables))
        if len(self.labels) != len(self.observables):
            raise DimensionMismatch("labels and observables differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise InvalidState(f"duplicate observable labels in {self.labels}")
        for label, observable in zip(self.labels, self.observables):
            observable.require_hermitian(f"observable {label!r}")
            if observable.dim != self.dim:
                raise DimensionMismatch(
                    f"observable {label!r} has dim {observable.dim}, expected {self.dim}"
                )
        if self.informationally_complete and self.gram_rank() != self.dim ** 2:
            raise IncompleteObservableSet(
                f"observables span {self.gram_rank()} of {self.dim ** 2} dimensions"
            )

    def gram_rank(self):
        """Rank of the Gram matrix tr(A_i A_j) of the observables plus the identity."""
        stack = [np.eye(self.dim)] + [o.entries for o in self.observables]
        vectors = np.array([m.reshape(-1) for m in stack])
        gram = (vectors.conj() @ vectors.T).real
        values = np.linalg.eigvalsh(gram)
        return int(np.sum(values > RANK_TOL * max(values.max(), 1.0)))

    def operator(self, label):
        try:
            return self.observables[self.labels.index(label)]
        except ValueError as exc:
            raise InvalidState(f"unknown observable label {label!r}") from exc

    def measured(self):
        """(label, observable) pairs excluding the identity, whose value is always 1."""
        return [
            (label, observable)
            for label, observable in zip(self.labels, self.observables)
            if not _is_identity_label(label)
        ]


@dataclass(frozen=True)
class Tomogram:
    dim: int
    entries: tuple
    source: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((str(l), float(v)) for l, v in self.entries))
        labels = [label for label, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise InvalidState(f"duplicate labels in tomogram: {labels}")
        if self.source not in SOURCES:
            raise InvalidState(f"unknown tomogram source {self.source!r}")

    def values(self):
        return dict(self.entries)

    def to_dict(self):
        return {
            "dim": self.dim,
            "entries": [{"label": label, "value": value} for label, value in self.entries],
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            dim=int(data["dim"]),
            entries=[(item["label"], item["value"]) for item in data["entries"]],
            source=data.get("source", "exact"),
        )


@dataclass(frozen=True)
class ReconstructionReport:
    residual: float
    clipped_mass: float
    residual_exceeded: bool
    eigenvalues_before: tuple = field(default=())


def hermitian_basis(d):
    """
    Trace-orthogonal Hermitian basis with identity: n-qubit Pauli strings
    for d = 2**n, generalized Gell-Mann matrices otherwise.
    """
    if d < 2:
        raise DimensionMismatch(f"basis needs d >= 2, got {d}")
    n = d.bit_length() - 1
    if 2 ** n == d:
        labels = ["".join(letters) for letters in product("IXYZ", repeat=n)]
        return ObservableSet(d, labels, [pauli(label) for label in labels], True)

    labels = ["I"]
    matrices = [np.eye(d, dtype=complex)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k], anti[k, j] = -1j, 1j
            labels += [f"S{j}{k}", f"A{j}{k}"]
            matrices += [sym, anti]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        labels.append(f"D{l}")
        matrices.append(np.diag(np.sqrt(2 / (l * (l + 1))) * diag).astype(complex))
    return ObservableSet(d, labels, [Operator(m) for m in matrices], True)


def _traceless_frame(d):
    """Hilbert-Schmidt orthonormal basis of traceless Hermitian d x d matrices."""
    basis = hermitian_basis(d)
    frame = []
    for _, observable in basis.measured():
        m = observable.entries
        frame.append(m / np.sqrt(np.trace(m @ m).real))
    return np.array(frame)


def reconstruct_with_report(tomogram, observable_set, residual_bound=0.05):
    d = observable_set.dim
    if tomogram.dim != d:
        raise DimensionMismatch(f"tomogram dim {tomogram.dim} vs observable set dim {d}")
    labels = [label for label, _ in tomogram.entries]
    observables = [observable_set.operator(label) for label in labels]
    measured = np.array([value for _, value in tomogram.entries])

    frame = _traceless_frame(d)
    design = np.einsum("kij,aji->ak", frame, np.array([o.entries for o in observables])).real
    offset = np.array([np.trace(o.entries).real / d for o in observables])
    if np.linalg.matrix_rank(design, tol=RANK_TOL) < d * d - 1:
        raise IncompleteObservableSet(
            f"{len(labels)} observables do not determine a {d}x{d} density matrix"
        )
    coefficients, _, _, _ = lstsq(design, measured - offset)
    residual = float(np.sum((design @ coefficients - (measured - offset)) ** 2))

    estimate = np.eye(d) / d + np.einsum("k,kij->ij", coefficients, frame)
    estimate = (estimate + estimate.conj().T) / 2
    values, vectors = np.linalg.eigh(estimate)
    clipped = np.clip(values, 0.0, None)
    clipped_mass = float(-values[values < 0].sum())
    projected = (vectors * (clipped / clipped.sum())) @ vectors.conj().T

    exceeded = residual > residual_bound
    if exceeded:
        logger.warning(
            "tomogram residual %.3e exceeds bound %.3e; values are inconsistent",
            residual, residual_bound,
        )
    report = ReconstructionReport(
        residual=residual,
        clipped_mass=clipped_mass,
        residual_exceeded=exceeded,
        eigenvalues_before=tuple(float(v) for v in values),
    )
    return DensityMatrix.from_matrix(projected), report


def reconstruct(tomogram, observable_set, residual_bound=0.05):
    return reconstruct_with_report(tomogram, observable_set, residual_bound)[0]


def least_squares_residual(rho, tomogram, observable_set):
    """sum over entries of (tr(rho A) - m)^2."""
    return float(sum(
        (expectation(rho, observable_set.operator(label)) - value) ** 2
        for label, value in tomogram.entries
    ))


def exact_tomogram(rho, observable_set):
    entries = [(label, expectation(rho, observable)) for label, observable in observable_set.measured()]
    return Tomogram(observable_set.dim, entries, "exact")


def noisy_tomogram(rho, observable_set, sigma, seed):
    """Exact values plus independent Gaussian noise of width ``sigma`` (PCG64, seeded)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    exact = exact_tomogram(rho, observable_set)
    noise = rng.normal(scale=sigma, size=len(exact.entries))
    entries = [(label, value + n) for (label, value), n in zip(exact.entries, noise)]
    return Tomogram(observable_set.dim, entries, "simulated-noisy")


def tomograph_via_protective(factory, observable_set, workers=1, residual_bound=0.05):
    """
    Protectively measure every non-identity observable with setups from
    ``factory(observable)`` and reconstruct. Returns (Tomogram, DensityMatrix).
    """
    setups = {label: factory(observable) for label, observable in observable_set.measured()}
    outcomes = run_batch(setups, workers=workers)
    entries = [(label, outcomes[label].estimate) for label in setups]
    tomogram = Tomogram(observable_set.dim, entries, "protective-simulated")
    logger.info("protective tomogram of %d observables assembled", len(entries))
    return tomogram, reconstruct(tomogram, observable_set, residual_bound)
