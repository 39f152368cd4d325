"""
Time-dependent Schrodinger propagation and adiabatic coupling schedules.

H(t) = static_part + g(t) * coupling_part, with g a non-negative envelope
normalized so that its integral over [0, T] is one. The integrator is the
ordered product of exact per-step exponentials exp(-i H(t_mid) dt), taken
from an eigendecomposition of H at each step midpoint: unitary by
construction and second order in dt.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import DegenerateLevel, DimensionMismatch, ScheduleError
from .hilbert import Operator, PureState, eig_hermitian, pauli, bloch_state

logger = logging.getLogger(__name__)

ENVELOPES = ("sin2", "constant", "trapezoid")

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class Schedule:
    """Coupling envelope g(t) on [0, total_time], sampled on ``steps`` midpoints."""

    total_time: float
    steps: int
    envelope: str = "sin2"
    ramp: float = 0.1

    def __post_init__(self):
        if not self.total_time > 0:
            raise ScheduleError(f"total_time must be positive, got {self.total_time!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ScheduleError(f"steps must be a positive integer, got {self.steps!r}")
        if self.envelope not in ENVELOPES:
            raise ScheduleError(f"unknown envelope {self.envelope!r}; choose from {ENVELOPES}")
        if self.envelope == "trapezoid" and not 0 < self.ramp <= 0.5:
            raise ScheduleError(f"trapezoid ramp fraction must be in (0, 0.5], got {self.ramp!r}")

    @classmethod
    def for_norm(cls, total_time, norm, envelope="sin2", steps_per_unit=64, ramp=0.1):
        """Schedule whose step count follows steps = ceil(steps_per_unit * T * norm)."""
        steps = max(1, math.ceil(steps_per_unit * total_time * max(norm, 1e-12)))
        return cls(total_time=total_time, steps=steps, envelope=envelope, ramp=ramp)

    @property
    def dt(self):
        return self.total_time / self.steps

    def midpoints(self):
        return (np.arange(self.steps) + 0.5) * self.dt

    def _shape(self, t):
        t = np.asarray(t, dtype=float)
        T = self.total_time
        if self.envelope == "sin2":
            return np.sin(np.pi * t / T) ** 2
        if self.envelope == "constant":
            return np.ones_like(t)
        edge = self.ramp * T
        return np.clip(np.minimum(np.minimum(t / edge, (T - t) / edge), 1.0), 0.0, None)

    @cached_property
    def normalization(self):
        # same midpoint quadrature as the propagator, so sum(g) * dt == 1
        return float(np.sum(self._shape(self.midpoints())) * self.dt)

    def g(self, t):
        return self._shape(t) / self.normalization

    def integral(self):
        return float(np.sum(self.g(self.midpoints())) * self.dt)

    @property
    def peak(self):
        """Upper bound of g over [0, T]."""
        if self.envelope == "sin2":
            return 2.0 / self.total_time
        if self.envelope == "constant":
            return 1.0 / self.total_time
        return 1.0 / ((1.0 - self.ramp) * self.total_time)


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    static_part: Operator
    coupling_part: Operator
    schedule: Schedule

    def __post_init__(self):
        self.static_part.require_hermitian("static part")
        self.coupling_part.require_hermitian("coupling part")
        if self.static_part.dim != self.coupling_part.dim:
            raise DimensionMismatch(
                f"static part has dim {self.static_part.dim}, "
                f"coupling part has dim {self.coupling_part.dim}"
            )

    @classmethod
    def constant(cls, hamiltonian, total_time, steps=None, steps_per_unit=64):
        zero = Operator(np.zeros((hamiltonian.dim, hamiltonian.dim)))
        if steps is None:
            schedule = Schedule.for_norm(total_time, hamiltonian.norm(), "constant", steps_per_unit)
        else:
            schedule = Schedule(total_time=total_time, steps=steps, envelope="constant")
        return cls(hamiltonian, zero, schedule)

    @property
    def dim(self):
        return self.static_part.dim

    def at(self, t):
        return Operator(
            self.static_part.entries + float(self.schedule.g(t)) * self.coupling_part.entries
        )

    def norm_bound(self):
        return self.static_part.norm() + self.schedule.peak * self.coupling_part.norm()


# ---------------------------------------------------------------------------
# Integrator


def step_unitaries(hamiltonians, dt):
    """exp(-i H dt) for a stack of Hermitian matrices of shape (..., d, d)."""
    values, vectors = np.linalg.eigh(hamiltonians)
    phases = np.exp(-1j * values * dt)
    return np.einsum("...ij,...j,...kj->...ik", vectors, phases, vectors.conj())


def evolve_interval(static, coupling, envelope, psi, t_start, t_end, steps):
    """
    Midpoint propagation of ``psi`` (shape (..., d)) from t_start to t_end
    in ``steps`` equal steps; ``static`` and ``coupling`` broadcast as (..., d, d).
    """
    if steps < 1:
        raise ScheduleError(f"steps must be positive, got {steps!r}")
    dt = (t_end - t_start) / steps
    psi = np.array(psi, dtype=complex)
    last_g = None
    unitary = None
    for j in range(steps):
        g = float(envelope(t_start + (j + 0.5) * dt))
        if g != last_g:
            unitary = step_unitaries(static + g * coupling, dt)
            last_g = g
        psi = np.einsum("...ij,...j->...i", unitary, psi)
    return psi


def propagate_batch(static, coupling, schedule, psi0):
    """Propagate a stack of independent blocks over the full schedule."""
    logger.debug(
        "propagating %s blocks over T=%.4g in %d steps",
        psi0.shape[:-1] or 1, schedule.total_time, schedule.steps,
    )
    return evolve_interval(
        static, coupling, schedule.g, psi0, 0.0, schedule.total_time, schedule.steps
    )


def propagate(h, psi0, record_every=None):
    """
    Trajectory [(t, PureState), ...] of psi0 under h. The initial state is
    recorded at t = 0, then every ``record_every`` steps; the final state is
    always included.
    """
    if psi0.dim != h.dim:
        raise DimensionMismatch(f"state has dim {psi0.dim}, Hamiltonian has dim {h.dim}")
    schedule = h.schedule
    record_every = record_every or schedule.steps
    if record_every < 1:
        raise ScheduleError(f"record_every must be positive, got {record_every!r}")

    static = h.static_part.entries
    coupling = h.coupling_part.entries
    trajectory = [(0.0, psi0)]
    psi = psi0.amplitudes
    done = 0
    while done < schedule.steps:
        chunk = min(record_every, schedule.steps - done)
        t_start = done * schedule.dt
        t_end = (done + chunk) * schedule.dt
        psi = evolve_interval(static, coupling, schedule.g, psi, t_start, t_end, chunk)
        done += chunk
        trajectory.append((t_end, PureState.from_vector(psi)))
    return trajectory


def evolve_to_times(h, psi0, sample_times):
    """States at each of ``sample_times`` (ascending, within [0, T]) on the schedule's step size."""
    times = [float(t) for t in sample_times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ScheduleError("sample times must be ascending")
    if times and (times[0] < 0 or times[-1] > h.schedule.total_time + 1e-12):
        raise ScheduleError(
            f"sample times must lie in [0, {h.schedule.total_time}]"
        )
    static = h.static_part.entries
    coupling = h.coupling_part.entries
    psi = psi0.amplitudes
    clock = 0.0
    states = []
    for t in times:
        if t > clock:
            steps = max(1, math.ceil((t - clock) / h.schedule.dt - 1e-9))
            psi = evolve_interval(static, coupling, h.schedule.g, psi, clock, t, steps)
            clock = t
        states.append((t, PureState.from_vector(psi)))
    return states


def unitary(h, t):
    """exp(-i H t) for a static Hermitian operator."""
    h.require_hermitian("Hamiltonian")
    return Operator(step_unitaries(h.entries, t))


# ---------------------------------------------------------------------------
# Spectral gap and spin rotation


def adiabatic_gap(h0, protected_index):
    """Distance from level ``protected_index`` (ascending order) to its nearest neighbour."""
    values, _ = eig_hermitian(h0)
    if h0.dim < 2:
        raise DegenerateLevel("a one-level system has no gap")
    if not 0 <= protected_index < h0.dim:
        raise DimensionMismatch(f"level index {protected_index} out of range for dim {h0.dim}")
    others = np.delete(values, protected_index)
    gap = float(np.min(np.abs(others - values[protected_index])))
    if gap < DEGENERACY_TOL:
        raise DegenerateLevel(
            f"level {protected_index} is degenerate (gap {gap:.3e}); it cannot be protected"
        )
    return gap


ROTATION_FIELDS = {"X": ("Y", pauli("Y")), "Y": ("-X", -1 * pauli("X"))}


def rotate_spin_to_z(initial_axis, omega=1.0, steps=64):
    """
    Rotate the +1 eigenstate of sigma_X (or sigma_Y) onto +z with a field
    along Y (or -X): H = -(omega/2) sigma_field for a quarter Larmor period.
    Returns (final state, field axis label).
    """
    try:
        field_label, field = ROTATION_FIELDS[initial_axis.upper()]
    except KeyError as exc:
        raise ScheduleError(f"initial axis must be X or Y, got {initial_axis!r}") from exc
    start = bloch_state((1, 0, 0) if initial_axis.upper() == "X" else (0, 1, 0))
    quarter_period = math.pi / (2 * omega)
    h = TimeDependentHamiltonian.constant(-(omega / 2) * field, quarter_period, steps=steps)
    final = propagate(h, start)[-1][1]
    logger.debug("rotated +%s with field %s: |<0|final>|^2 = %.12f",
                 initial_axis, field_label, abs(final.amplitudes[0]) ** 2)
    return final, field_label


# ---------------------------------------------------------------------------
# Export


def trajectory_rows(trajectory):
    """CSV-ready rows: t, then re/im of every amplitude."""
    rows = []
    for t, state in trajectory:
        row = {"t": t}
        for index, amplitude in enumerate(state.amplitudes):
            row[f"re_{index}"] = float(amplitude.real)
            row[f"im_{index}"] = float(amplitude.imag)
        rows.append(row)
    return rows
