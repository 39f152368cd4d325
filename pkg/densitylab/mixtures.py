"""
Finite ensembles: proper mixtures with integer counts, their sampling
memory, fluctuation statistics and the unpolarized-beam demonstrations.

Random numbers come from numpy's PCG64 bit generator. Every stochastic
function takes an explicit integer seed; independent streams are derived
from it with ``numpy.random.SeedSequence.spawn``.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import binom

from .dynamics import rotate_spin_to_z
from .exceptions import (
    DimensionMismatch,
    InconsistentPrefix,
    InvalidWeights,
    NonIntegralCounts,
    NotQubit,
)
from .hilbert import (
    DensityMatrix,
    PureState,
    basis_state,
    mix,
    partial_trace,
    tensor,
    trace_distance,
)

logger = logging.getLogger(__name__)

MODES = ("with_replacement", "without_replacement")
# members times trials per Monte Carlo chunk
CHUNK_SIZE = 1_000_000


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class FiniteEnsemble:
    """mu sub-ensembles, each of ``count`` systems in one pure state."""

    components: tuple

    def __post_init__(self):
        components = tuple((state, int(count)) for state, count in self.components)
        if not components:
            raise InvalidWeights("an ensemble needs at least one component")
        if any(count < 0 for _, count in components):
            raise InvalidWeights("component counts must be non-negative")
        if sum(count for _, count in components) < 1:
            raise InvalidWeights("an ensemble needs at least one system")
        dims = {state.dim for state, _ in components}
        if len(dims) != 1:
            raise DimensionMismatch(f"component states have different dims {sorted(dims)}")
        object.__setattr__(self, "components", components)

    @property
    def states(self):
        return [state for state, _ in self.components]

    @property
    def counts(self):
        return np.array([count for _, count in self.components], dtype=np.int64)

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def weights(self):
        return self.counts / self.total

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True)
class DrawRecord:
    outcomes: tuple
    mode: str
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(int(o) for o in self.outcomes))
        if self.mode not in MODES:
            raise InvalidWeights(f"unknown sampling mode {self.mode!r}; choose from {MODES}")

    def counts(self, mu):
        return np.bincount(np.array(self.outcomes, dtype=np.int64), minlength=mu)[:mu]


def ensemble_density_matrix(e):
    """sum_a (N_a / N) |phi_a><phi_a|."""
    return mix([(state, count / e.total) for state, count in e.components])


def sample(e, n, mode, seed):
    """
    Draw ``n`` systems in order. With replacement the draws are independent
    with probabilities N_a/N; without replacement the counts follow the
    multivariate hypergeometric law.
    """
    rng = make_rng(seed)
    if mode == "with_replacement":
        outcomes = rng.choice(len(e), size=n, p=e.weights)
    elif mode == "without_replacement":
        if n > e.total:
            raise InconsistentPrefix(f"cannot draw {n} systems from {e.total} without replacement")
        population = np.repeat(np.arange(len(e)), e.counts)
        outcomes = rng.permutation(population)[:n]
    else:
        raise InvalidWeights(f"unknown sampling mode {mode!r}; choose from {MODES}")
    return DrawRecord(tuple(int(o) for o in outcomes), mode, seed)


def _remaining_distribution(counts, drawn):
    remaining = counts - drawn
    if np.any(remaining < 0):
        raise InconsistentPrefix(
            f"prefix draws {drawn.tolist()} exceed component counts {counts.tolist()}"
        )
    left = int(remaining.sum())
    if left == 0:
        raise InconsistentPrefix("the prefix exhausts the ensemble")
    return remaining / left


def conditional_distribution(e, observed, mode=None):
    """
    Probability of each component for the next draw, given the observed
    prefix (a DrawRecord, or a sequence of component indices plus ``mode``).
    """
    if isinstance(observed, DrawRecord):
        outcomes, mode = observed.outcomes, observed.mode
    else:
        outcomes = tuple(int(o) for o in observed)
    if mode not in MODES:
        raise InvalidWeights(f"unknown sampling mode {mode!r}; choose from {MODES}")
    if any(not 0 <= o < len(e) for o in outcomes):
        raise InconsistentPrefix(f"prefix {outcomes} names a component outside 0..{len(e) - 1}")
    if mode == "with_replacement":
        return e.weights
    drawn = np.bincount(np.array(outcomes, dtype=np.int64), minlength=len(e))
    return _remaining_distribution(e.counts, drawn)


def total_variation(p, q):
    return 0.5 * float(np.sum(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))


# ---------------------------------------------------------------------------
# Spin statistics


def _z_expectations(e):
    if any(state.dim != 2 for state in e.states):
        raise NotQubit("spin statistics need qubit components")
    return np.array([
        abs(state.amplitudes[0]) ** 2 - abs(state.amplitudes[1]) ** 2 for state in e.states
    ])


def total_spin_z_stats(e):
    """
    Mean and standard deviation of Sigma_z = sum_n sigma_z,n over the whole
    collection, every member independent. sigma_z^2 = 1, so each member
    contributes variance 1 - <sigma_z>^2.
    """
    z = _z_expectations(e)
    counts = e.counts
    mean = float(np.sum(counts * z))
    variance = float(np.sum(counts * (1.0 - z ** 2)))
    return mean, math.sqrt(variance)


def averaged_spin_stats(e):
    """Mean and standard deviation of Sigma_z / N."""
    mean, std = total_spin_z_stats(e)
    return mean / e.total, std / e.total


def despagnat_pair(N):
    """Unpolarized beams of N spins: half up/down along z, half up/down along x."""
    if N < 2 or N % 2:
        raise NonIntegralCounts(f"N must be a positive even integer, got {N!r}")
    half = N // 2
    z_mixture = FiniteEnsemble(((basis_state(0, 2), half), (basis_state(1, 2), half)))
    x_mixture = FiniteEnsemble((
        (PureState.from_vector([1, 1]), half),
        (PureState.from_vector([1, -1]), half),
    ))
    return z_mixture, x_mixture


def measure_total_spin_z(e, trials, rng):
    """Per-trial Sigma_z from sampling sigma_z on every member with Born probabilities."""
    z = _z_expectations(e)
    p_up = np.repeat((1.0 + z) / 2.0, e.counts)
    chunk = max(1, CHUNK_SIZE // max(e.total, 1))
    totals = []
    for start in range(0, trials, chunk):
        size = min(chunk, trials - start)
        ups = (rng.random((size, e.total)) < p_up).sum(axis=1)
        totals.append(2 * ups - e.total)
    return np.concatenate(totals).astype(np.int64)


@dataclass(frozen=True)
class PreparationStats:
    label: str
    analytic_mean: float
    analytic_std: float
    empirical_mean: float
    empirical_std: float
    density_matrix: DensityMatrix
    trial_values: tuple | None = None


@dataclass(frozen=True)
class DespagnatReport:
    N: int
    trials: int
    seed: int
    preparations: tuple
    shared_density_matrix: DensityMatrix
    single_system_distance: float
    collective_distance: float


def despagnat_experiment(N, trials, seed, keep_trials=False):
    """
    Monte Carlo of sigma_z on every member of both unpolarized beams; the
    z beam is dispersion-free, the x beam fluctuates by sqrt(N), while
    both single-system density matrices are I/2.
    """
    if trials < 1:
        raise InvalidWeights(f"trials must be positive, got {trials!r}")
    preparations = []
    streams = np.random.SeedSequence(seed).spawn(2)
    for label, ensemble, stream in zip(("z", "x"), despagnat_pair(N), streams):
        values = measure_total_spin_z(ensemble, trials, np.random.Generator(np.random.PCG64(stream)))
        mean, std = total_spin_z_stats(ensemble)
        preparations.append(PreparationStats(
            label=label,
            analytic_mean=mean,
            analytic_std=std,
            empirical_mean=float(values.mean()),
            empirical_std=float(values.std()),
            density_matrix=ensemble_density_matrix(ensemble),
            trial_values=tuple(int(v) for v in values) if keep_trials else None,
        ))
        logger.info("%s beam: empirical std %.4f (analytic %.4f)", label, values.std(), std)
    single, collective = collective_distinguishability(N)
    return DespagnatReport(
        N=N,
        trials=trials,
        seed=seed,
        preparations=tuple(preparations),
        shared_density_matrix=DensityMatrix.maximally_mixed(2),
        single_system_distance=single,
        collective_distance=collective,
    )


def collective_distinguishability(N):
    """
    (trace distance of the single-system density matrices, total-variation
    distance between the Sigma_z distributions of the two beams).
    """
    z_mixture, x_mixture = despagnat_pair(N)
    single = trace_distance(ensemble_density_matrix(z_mixture), ensemble_density_matrix(x_mixture))
    # z beam: Sigma_z = 0 surely; x beam: Sigma_z = 2 Binomial(N, 1/2) - N
    collective = 1.0 - float(binom.pmf(N // 2, N, 0.5))
    return single, collective


# ---------------------------------------------------------------------------
# Beam recombination and spin rotation


@dataclass(frozen=True)
class BeamMergeReport:
    rho_full_a: DensityMatrix
    rho_full_b: DensityMatrix
    rho_spin_a: DensityMatrix
    rho_spin_b: DensityMatrix
    rho_path_a: DensityMatrix
    rho_path_b: DensityMatrix
    full_distance: float
    spin_distance: float
    path_distance: float


def beam_merge_demo():
    """
    Spin (first factor) correlated with a two-path qubit (second factor).
    Beam A pairs z eigenstates with paths 0 and 1, beam B pairs x eigenstates
    with them. The full states differ; the spin reductions coincide.
    """
    p0, p1 = basis_state(0, 2), basis_state(1, 2)
    up_z, down_z = basis_state(0, 2), basis_state(1, 2)
    up_x, down_x = PureState.from_vector([1, 1]), PureState.from_vector([1, -1])
    full_a = mix([(tensor(up_z, p0), 0.5), (tensor(down_z, p1), 0.5)])
    full_b = mix([(tensor(up_x, p0), 0.5), (tensor(down_x, p1), 0.5)])
    spin_a, spin_b = (partial_trace(r, (2, 2), keep=1) for r in (full_a, full_b))
    path_a, path_b = (partial_trace(r, (2, 2), keep=2) for r in (full_a, full_b))
    return BeamMergeReport(
        rho_full_a=full_a,
        rho_full_b=full_b,
        rho_spin_a=spin_a,
        rho_spin_b=spin_b,
        rho_path_a=path_a,
        rho_path_b=path_b,
        full_distance=trace_distance(full_a, full_b),
        spin_distance=trace_distance(spin_a, spin_b),
        path_distance=trace_distance(path_a, path_b),
    )


@dataclass(frozen=True)
class RotationReport:
    final_from_x: PureState
    final_from_y: PureState
    field_for_x: str
    field_for_y: str
    distance_x_to_up: float
    distance_y_to_up: float
    distance_between: float


def spin_rotation_demo(omega=1.0):
    """Rotate +x with a Y field and +y with a -X field; both land on +z."""
    up = basis_state(0, 2)
    from_x, field_x = rotate_spin_to_z("X", omega)
    from_y, field_y = rotate_spin_to_z("Y", omega)
    return RotationReport(
        final_from_x=from_x,
        final_from_y=from_y,
        field_for_x=field_x,
        field_for_y=field_y,
        distance_x_to_up=trace_distance(from_x, up),
        distance_y_to_up=trace_distance(from_y, up),
        distance_between=trace_distance(from_x, from_y),
    )


# ---------------------------------------------------------------------------
# Frequency convergence


@dataclass(frozen=True)
class FrequencyRow:
    N: int
    worst_case_distance: float
    mean_random_distance: float
    memory_ratio: float


def integral_counts(weights, N):
    fractions = [Fraction(str(w)) for w in weights]
    if sum(fractions) != 1 or any(f < 0 for f in fractions):
        raise InvalidWeights(f"weights {weights} must be non-negative and sum to 1")
    counts = [f * N for f in fractions]
    if any(c.denominator != 1 for c in counts):
        raise NonIntegralCounts(f"weights {weights} do not give integer counts at N={N}")
    return np.array([int(c) for c in counts], dtype=np.int64)


def frequency_convergence(weights, N_ladder, n_draws, seed, samples=200):
    """
    Memory of a finite ensemble along a ladder of sizes N at fixed weights:
    total-variation distance between the next-draw distribution after
    ``n_draws`` draws without replacement and the weights, for the worst
    prefix (all draws from one component) and averaged over random prefixes.
    """
    ladder = [int(N) for N in N_ladder]
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise InvalidWeights("N ladder must be strictly ascending")
    streams = np.random.SeedSequence(seed).spawn(len(ladder))
    rows = []
    for N, stream in zip(ladder, streams):
        counts = integral_counts(weights, N)
        target = counts / N
        if n_draws >= N:
            raise InconsistentPrefix(f"{n_draws} draws leave nothing of N={N}")
        worst = 0.0
        for index in np.flatnonzero(counts >= n_draws):
            drawn = np.zeros_like(counts)
            drawn[index] = n_draws
            worst = max(worst, total_variation(_remaining_distribution(counts, drawn), target))
        rng = np.random.Generator(np.random.PCG64(stream))
        draws = rng.multivariate_hypergeometric(counts, n_draws, size=samples)
        mean_random = float(np.mean([
            total_variation(_remaining_distribution(counts, drawn), target) for drawn in draws
        ]))
        rows.append(FrequencyRow(N, worst, mean_random, n_draws / (N - n_draws)))
    return rows
