"""Time evolution: closed systems, proper mixtures, and dilated open systems.

Closed evolution is computed through the exact matrix exponential of the
Hamiltonian (no ODE stepping), which preserves trace, Hermiticity and
spectrum to machine precision at desk-scale dimensions. Open-system dynamics
is obtained by evolving a system-ancilla product closed and tracing the
ancilla out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .hilbert import DensityOperator, StateVector, partial_trace, tensor, unitary_exp
from .probability import ImproperMixture, ProperMixture, PureState


@dataclass(frozen=True)
class Hamiltonian:
    """Hermitian generator of closed evolution; hbar configurable, default 1."""

    matrix: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        from .hilbert import _require_hermitian, as_cmatrix

        object.__setattr__(self, "matrix", _require_hermitian(as_cmatrix(self.matrix)))
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def propagator(self, t: float) -> np.ndarray:
        return unitary_exp(self.matrix, t, self.hbar)


def evolve_closed(rho, h: Hamiltonian, t: float) -> DensityOperator:
    """Conjugate the state with the propagator: U(t) rho U(t)^dag."""
    rho = rho if isinstance(rho, DensityOperator) else DensityOperator(rho)
    if rho.dim != h.dim:
        raise DimensionMismatch(f"state dim {rho.dim} != Hamiltonian dim {h.dim}")
    u = h.propagator(t)
    return DensityOperator(u @ rho.matrix @ u.conj().T)


def _evolve_component(comp, u: np.ndarray):
    if isinstance(comp, PureState):
        return PureState(StateVector(u @ comp.vector.amplitudes), label=comp.label)
    return ImproperMixture(DensityOperator(u @ comp.rho @ u.conj().T), label=comp.label)


def evolve_proper_mixture(m: ProperMixture, h: Hamiltonian, t: float) -> ProperMixture:
    """Evolve every component closed; the epistemic weights do not change."""
    if m.dim != h.dim:
        raise DimensionMismatch(f"component dim {m.dim} != Hamiltonian dim {h.dim}")
    u = h.propagator(t)
    return ProperMixture(
        [(w, _evolve_component(comp, u)) for w, comp in m.components],
        label=m.label,
    )


def evolve_open_by_dilation(rho_sys: DensityOperator, ancilla: DensityOperator,
                            joint_h: Hamiltonian, t: float) -> DensityOperator:
    """Open-system evolution as the reduced dynamics of a closed dilation.

    The system-ancilla product state evolves under the joint Hamiltonian and
    the ancilla is traced out. Without an interaction term this reduces to
    closed evolution of the system alone; with one, the reduced map need not
    be linear on system states.
    """
    d_s, d_a = rho_sys.dim, ancilla.dim
    if joint_h.dim != d_s * d_a:
        raise DimensionMismatch(
            f"joint Hamiltonian dim {joint_h.dim} != {d_s} * {d_a}"
        )
    joint = DensityOperator(tensor(rho_sys, ancilla))
    evolved = evolve_closed(joint, joint_h, t)
    return partial_trace(evolved, (d_s, d_a), keep="A")
