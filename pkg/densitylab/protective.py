"""
Protective measurement with a von Neumann pointer.

The system starts in a non-degenerate eigenstate of a protecting
Hamiltonian H_p and is coupled adiabatically to a pointer on a periodic
grid:

    H_total(t) = H_p (x) 1 + g(t) A (x) P + 1 (x) P^2 / 2M

with the integral of g equal to one, so the pointer position shifts by
<A>. Every term commutes with the pointer momentum P, so the composite
evolution is block diagonal in the grid's momentum basis: one d x d block
H_p + g(t) p_k A + p_k^2/2M per grid momentum p_k. The blocks are
propagated together, then transformed back to position space for readout.

The protecting Hamiltonian for an entangled state is a synthetic rank-one
construction (``build_protection_hamiltonian``); nothing here depends on
how a physical protection would be realized.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from scipy import fft

from .dynamics import Schedule, adiabatic_gap, propagate_batch
from .exceptions import (
    DegenerateLevel,
    DimensionMismatch,
    InvalidState,
    PointerOutOfGrid,
    ScheduleError,
)
from .hilbert import (
    Operator,
    PureState,
    eig_hermitian,
    expectation,
    partial_trace,
    tensor,
)

logger = logging.getLogger(__name__)

EIGEN_RESIDUAL_TOL = 1e-9
MIN_GAP = 1e-8
EDGE_FRACTION = 0.1
EDGE_MASS_TOL = 1e-6
# momentum modes whose initial amplitude is below this fraction of the peak are frozen
MODE_CUTOFF = 1e-14


@dataclass(frozen=True)
class Apparatus:
    """Pointer on a uniform periodic grid of ``grid_points`` sites over [-L, L)."""

    grid_points: int = 128
    half_width: float = 10.0
    width: float = 1.0
    mass: float = 1e6

    def __post_init__(self):
        q = self.grid_points
        if int(q) != q or q < 2 or q & (q - 1):
            raise ScheduleError(f"grid_points must be a power of two, got {q!r}")
        if not (self.half_width > 0 and self.width > 0 and self.mass > 0):
            raise ScheduleError("half_width, width and mass must be positive")
        if self.half_width < 8 * self.width:
            raise ScheduleError(
                f"grid half width {self.half_width} must be at least 8 pointer widths "
                f"({8 * self.width})"
            )

    @property
    def spacing(self):
        return 2 * self.half_width / self.grid_points

    @cached_property
    def positions(self):
        return -self.half_width + self.spacing * np.arange(self.grid_points)

    @cached_property
    def momenta(self):
        return 2 * np.pi * fft.fftfreq(self.grid_points, d=self.spacing)

    @cached_property
    def initial_wavefunction(self):
        """Gaussian with position standard deviation ``width``, unit discrete norm."""
        psi = np.exp(-self.positions ** 2 / (4 * self.width ** 2)).astype(complex)
        return psi / np.linalg.norm(psi)

    @cached_property
    def initial_momentum_amplitudes(self):
        return fft.fft(self.initial_wavefunction, norm="ortho")

    @cached_property
    def active_modes(self):
        amplitudes = np.abs(self.initial_momentum_amplitudes)
        return amplitudes > MODE_CUTOFF * amplitudes.max()

    @cached_property
    def initial_mean(self):
        return float(np.sum(self.positions * np.abs(self.initial_wavefunction) ** 2))

    def max_active_momentum(self):
        return float(np.max(np.abs(self.momenta[self.active_modes])))


def protected_level(hamiltonian, state):
    """(energy, ascending level index, gap to the nearest other level) of an eigenstate."""
    psi = state.amplitudes
    energy = float(np.vdot(psi, hamiltonian.entries @ psi).real)
    values, _ = eig_hermitian(hamiltonian)
    index = int(np.argmin(np.abs(values - energy)))
    return energy, index, adiabatic_gap(hamiltonian, index)


@dataclass(frozen=True)
class ProtectiveSetup:
    protection_hamiltonian: Operator
    protected_state: PureState
    observable: Operator
    schedule: Schedule
    apparatus: Apparatus = Apparatus()

    def __post_init__(self):
        h = self.protection_hamiltonian.require_hermitian("protection Hamiltonian")
        self.observable.require_hermitian("observable")
        if not h.dim == self.protected_state.dim == self.observable.dim:
            raise DimensionMismatch(
                f"protection Hamiltonian ({h.dim}), protected state "
                f"({self.protected_state.dim}) and observable ({self.observable.dim}) "
                "must share one dimension"
            )
        psi = self.protected_state.amplitudes
        residual = h.entries @ psi - self.energy * psi
        if np.linalg.norm(residual) > EIGEN_RESIDUAL_TOL:
            raise InvalidState(
                "protected state is not an eigenstate of the protection Hamiltonian "
                f"(residual {np.linalg.norm(residual):.3e})"
            )
        if self.gap < MIN_GAP:
            raise DegenerateLevel(f"protected level gap {self.gap:.3e} is below {MIN_GAP}")

    @cached_property
    def _level(self):
        return protected_level(self.protection_hamiltonian, self.protected_state)

    @property
    def energy(self):
        return self._level[0]

    @property
    def level_index(self):
        return self._level[1]

    @property
    def gap(self):
        return self._level[2]

    def exact_value(self):
        return expectation(self.protected_state, self.observable)


@dataclass(frozen=True)
class MeasurementOutcome:
    pointer_shift: float
    estimate: float
    disturbance: float
    schedule_used: Schedule
    sampled_position: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.disturbance <= 1.0:
            raise InvalidState(f"disturbance {self.disturbance!r} outside [0, 1]")


@dataclass(frozen=True)
class ScalingRow:
    T: float
    error: float
    disturbance: float
    estimate: float
    exact: float


def build_protection_hamiltonian(target, gap):
    """
    Synthetic rank-one protection H = -gap |target><target|, used whenever
    no physical protecting Hamiltonian is given: target is the unique ground
    state and the gap is exactly ``gap``.
    """
    if not gap > 0:
        raise DegenerateLevel(f"protection gap must be positive, got {gap!r}")
    psi = target.amplitudes
    return Operator(-gap * np.outer(psi, psi.conj()))


def default_schedule(protection_hamiltonian, observable, apparatus, total_time,
                     envelope="sin2", steps_per_unit=64, ramp=0.1):
    """Schedule following the steps rule for the pointer-coupled block Hamiltonians."""
    peak = Schedule(total_time=total_time, steps=1, envelope=envelope, ramp=ramp).peak
    p_max = apparatus.max_active_momentum()
    norm = (
        protection_hamiltonian.norm()
        + p_max * observable.norm() * peak
        + p_max ** 2 / (2 * apparatus.mass)
    )
    return Schedule.for_norm(total_time, norm, envelope, steps_per_unit, ramp)


def run_protective(setup, readout="expectation", seed=None):
    """
    Couple the pointer to ``setup.observable`` and read the pointer shift.

    ``readout="expectation"`` (default) reports the deterministic shift of
    the mean pointer position; ``"single_shot"`` samples one position from
    the final pointer distribution with a seeded PCG64 generator.
    """
    app = setup.apparatus
    schedule = setup.schedule
    d = setup.observable.dim
    psi = setup.protected_state.amplitudes

    active = app.active_modes
    p = app.momenta[active]
    identity = np.eye(d)
    static = (
        setup.protection_hamiltonian.entries[None, :, :]
        + (p ** 2 / (2 * app.mass))[:, None, None] * identity
    )
    coupling = p[:, None, None] * setup.observable.entries[None, :, :]

    blocks = app.initial_momentum_amplitudes[:, None] * psi[None, :]
    logger.debug(
        "protective run: dim=%d, %d of %d pointer modes active, %d steps",
        d, int(active.sum()), app.grid_points, schedule.steps,
    )
    blocks[active] = propagate_batch(static, coupling, schedule, blocks[active])

    in_position = fft.ifft(blocks, axis=0, norm="ortho")
    density = np.sum(np.abs(in_position) ** 2, axis=1)
    total = float(density.sum())
    edge = np.abs(app.positions) >= (1 - EDGE_FRACTION) * app.half_width
    edge_mass = float(density[edge].sum())
    if edge_mass > EDGE_MASS_TOL:
        raise PointerOutOfGrid(
            f"pointer probability {edge_mass:.3e} in the outer {EDGE_FRACTION:.0%} of the grid; "
            "widen the grid or shorten the shift"
        )

    mean = float(np.sum(app.positions * density) / total)
    normalization = schedule.integral()
    shift = mean - app.initial_mean
    sampled = None
    if readout == "single_shot":
        rng = np.random.Generator(np.random.PCG64(seed))
        sampled = float(rng.choice(app.positions, p=density / total))
        shift = sampled - app.initial_mean
    elif readout != "expectation":
        raise ScheduleError(f"unknown readout {readout!r}")

    reduced = np.einsum("ks,kt->st", blocks, blocks.conj())
    kept = float(np.vdot(psi, reduced @ psi).real)
    disturbance = min(max(1.0 - kept, 0.0), 1.0)

    return MeasurementOutcome(
        pointer_shift=shift,
        estimate=shift / normalization,
        disturbance=disturbance,
        schedule_used=schedule,
        sampled_position=sampled,
    )


def run_batch(setups, workers=1, **kwargs):
    """Run ``{label: setup}`` independently; returns ``{label: outcome}`` in input order."""
    labels = list(setups)
    if workers <= 1:
        return {label: run_protective(setups[label], **kwargs) for label in labels}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = pool.map(lambda label: run_protective(setups[label], **kwargs), labels)
        return dict(zip(labels, outcomes))


def split_dims(chi, a):
    d1 = a.dim
    if chi.dim % d1:
        raise DimensionMismatch(f"observable dim {d1} does not divide state dim {chi.dim}")
    return d1, chi.dim // d1


def entangled_exact(chi, a):
    """tr(rho_1 a) with rho_1 the reduced state of the first factor of chi."""
    dims = split_dims(chi, a)
    return expectation(partial_trace(chi.projector(), dims, keep=1), a)


def entangled_setup_factory(chi, dims, gap=1.0, total_time=None, apparatus=None,
                            envelope="sin2", steps_per_unit=64):
    """
    Factory ``observable on system 1 -> ProtectiveSetup`` protecting ``chi``
    with the rank-one Hamiltonian and measuring ``observable (x) 1``.
    """
    apparatus = apparatus or Apparatus()
    total_time = total_time or 50.0 / gap
    h = build_protection_hamiltonian(chi, gap)
    rest = Operator.identity(dims[1])

    def build(observable):
        full = tensor(observable, rest)
        schedule = default_schedule(h, full, apparatus, total_time, envelope, steps_per_unit)
        return ProtectiveSetup(h, chi, full, schedule, apparatus)

    return build


def pure_setup_factory(protection_hamiltonian, protected_state, total_time=None,
                       apparatus=None, envelope="sin2", steps_per_unit=64):
    """Factory ``observable -> ProtectiveSetup`` for a fixed protected eigenstate."""
    apparatus = apparatus or Apparatus()
    T = total_time or 50.0 / protected_level(protection_hamiltonian, protected_state)[2]

    def build(observable):
        schedule = default_schedule(
            protection_hamiltonian, observable, apparatus, T, envelope, steps_per_unit
        )
        return ProtectiveSetup(protection_hamiltonian, protected_state, observable, schedule, apparatus)

    return build


def run_protective_entangled(chi, a, gap=1.0, schedule=None, apparatus=None,
                             total_time=None, readout="expectation", seed=None):
    """
    Protectively measure ``a (x) 1`` on the entangled state ``chi``; the
    estimate approximates tr(rho_1 a).
    """
    a.require_hermitian("observable")
    dims = split_dims(chi, a)
    apparatus = apparatus or Apparatus()
    setup = entangled_setup_factory(chi, dims, gap, total_time, apparatus)(a)
    if schedule is not None:
        setup = replace(setup, schedule=schedule)
    return run_protective(setup, readout=readout, seed=seed)


def error_scaling_study(setup, T_values, steps_per_unit=64):
    """
    Rerun ``setup`` at each total time (steps rule reapplied) and report
    |estimate - exact| and the disturbance.
    """
    T_values = [float(T) for T in T_values]
    if any(b <= a for a, b in zip(T_values, T_values[1:])):
        raise ScheduleError("T values must be strictly ascending")
    exact = setup.exact_value()
    rows = []
    for T in T_values:
        schedule = default_schedule(
            setup.protection_hamiltonian, setup.observable, setup.apparatus, T,
            setup.schedule.envelope, steps_per_unit, setup.schedule.ramp,
        )
        outcome = run_protective(replace(setup, schedule=schedule))
        rows.append(ScalingRow(
            T=T,
            error=abs(outcome.estimate - exact),
            disturbance=outcome.disturbance,
            estimate=outcome.estimate,
            exact=exact,
        ))
        logger.info("T=%.4g: error %.3e, disturbance %.3e", T, rows[-1].error, outcome.disturbance)
    return rows


def outcome_record(label, outcome, exact):
    """JSON record of one protective measurement."""
    return {
        "observable_label": label,
        "estimate": outcome.estimate,
        "exact": exact,
        "error": abs(outcome.estimate - exact),
        "T": outcome.schedule_used.total_time,
        "disturbance": outcome.disturbance,
    }
