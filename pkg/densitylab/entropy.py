"""
Quantum (von Neumann) entropy of a single system.

S = -tr(rho ln rho), in nats unless bits are asked for. Non-negative,
zero exactly on pure states, ln d on the maximally mixed state.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import entr

from .dynamics import evolve_to_times
from .exceptions import DimensionMismatch, InvalidState, NotUnitary
from .hilbert import DensityMatrix, as_density, partial_trace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntropyReport:
    value: float
    eigenvalue_spectrum: tuple
    purity: float
    unit: str = "nats"

    def to_dict(self):
        return {
            "S_nats": self.value if self.unit == "nats" else self.value * math.log(2),
            "spectrum": list(self.eigenvalue_spectrum),
            "purity": self.purity,
        }


def von_neumann_entropy(rho, bits=False):
    rho = as_density(rho)
    raw = np.linalg.eigvalsh(rho.entries)
    # DensityMatrix admits eigenvalues down to -1e-10; those count as zero
    negative = raw < 0
    if negative.any():
        logger.debug("clamped %d eigenvalues (lowest %.3e) to zero", int(negative.sum()), raw.min())
    values = np.clip(raw, 0.0, None)
    nats = float(np.sum(entr(values)))
    return EntropyReport(
        value=nats / math.log(2) if bits else nats,
        eigenvalue_spectrum=tuple(float(v) for v in values),
        purity=float(np.sum(values ** 2)),
        unit="bits" if bits else "nats",
    )


def entropy_under_unitary(rho, u):
    """(S before, S after) for rho -> U rho U^dagger."""
    rho = as_density(rho)
    if not u.is_unitary():
        raise NotUnitary("operator is not unitary within 1e-10")
    if u.dim != rho.dim:
        raise DimensionMismatch(f"unitary has dim {u.dim}, state has dim {rho.dim}")
    evolved = DensityMatrix.from_matrix(u.entries @ rho.entries @ u.entries.conj().T)
    return von_neumann_entropy(rho).value, von_neumann_entropy(evolved).value


def subsystem_entropy(state, dims, keep=1):
    return von_neumann_entropy(partial_trace(as_density(state), dims, keep)).value


def entanglement_growth(h_total, psi0, sample_times, dims):
    """
    [(t, S of subsystem 1), ...] for psi0 evolved under h_total on a
    d1 x d2 system.
    """
    d1, d2 = dims
    if d1 * d2 != h_total.dim or psi0.dim != h_total.dim:
        raise DimensionMismatch(
            f"dims {d1}x{d2}, Hamiltonian dim {h_total.dim}, state dim {psi0.dim} disagree"
        )
    if subsystem_entropy(psi0, dims) > 1e-8:
        raise InvalidState("initial state must be a product state")
    rows = []
    for t, state in evolve_to_times(h_total, psi0, sample_times):
        rows.append((t, subsystem_entropy(state, dims, keep=1)))
    logger.debug("entanglement growth sampled at %d times", len(rows))
    return rows
