"""Measurement as entanglement with a pointer system.

An idealized measurement of a generalized observable couples the system to a
pointer with one position per outcome, including the no-registration one.
The premeasurement map sends the initial product vector onto a superposition
whose eigenvalue branches carry square-root detection amplitudes and whose
no-registration branch carries the undetected-update state. Tracing the
pointer out yields the reduced post-measurement state; comparing it with a
linearized unitary model shows the reduced dynamics cannot be linear as soon
as detection is neither absent nor certain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NormalizationViolation,
    PointerCountMismatch,
    ZeroProbabilityBranch,
)
from .hilbert import DensityOperator, StateVector, partial_trace
from .observables import GeneralizedObservable, PhysicalProperty
from .probability import (
    PROB_FLOOR,
    DetectionModel,
    ImproperMixture,
    PureState,
    _single_state,
    overall_prob,
)
from .measurement import glp_update, glp_update_pure


class PointerBasis:
    """Orthonormal pointer states, one per outcome (no-registration first)."""

    def __init__(self, vectors: Sequence[StateVector]):
        if not vectors:
            raise PointerCountMismatch("pointer basis is empty")
        dim = vectors[0].dim
        for v in vectors:
            if v.dim != dim:
                raise DimensionMismatch("pointer vectors have mixed dimensions")
        gram = np.array(
            [[vi.overlap(vj) for vj in vectors] for vi in vectors]
        )
        if np.abs(gram - np.eye(len(vectors))).max() > 1e-10:
            raise ValueError("pointer vectors are not orthonormal")
        self.vectors: tuple[StateVector, ...] = tuple(vectors)

    @classmethod
    def canonical(cls, n_outcomes: int) -> "PointerBasis":
        """Standard basis of an ``n_outcomes``-dimensional pointer space."""
        eye = np.eye(n_outcomes, dtype=complex)
        return cls([StateVector(eye[:, k]) for k in range(n_outcomes)])

    @property
    def count(self) -> int:
        return len(self.vectors)

    @property
    def dim(self) -> int:
        return self.vectors[0].dim


@dataclass(frozen=True)
class AxmPhases:
    """Free phases of the premeasurement amplitudes (radians).

    ``theta`` holds one phase per eigenvalue branch, ``phi0`` the phase of
    the no-registration branch. All observable reduced-state predictions are
    independent of these choices.
    """

    theta: tuple[float, ...]
    phi0: float = 0.0

    @classmethod
    def zero(cls, n_eigenvalues: int) -> "AxmPhases":
        return cls(theta=(0.0,) * n_eigenvalues, phi0=0.0)


def no_detection_update(psi: PureState, a0obs: GeneralizedObservable,
                        d: DetectionModel) -> tuple[StateVector | None, float]:
    """No-registration branch: post vector and its overall probability.

    Returns ``(None, 0.0)`` when detection is certain on the support of the
    state, in which case the branch never occurs.
    """
    f0 = PhysicalProperty(a0obs, {a0obs.a0})
    p0 = overall_prob(psi, f0, d)
    if p0 <= PROB_FLOOR:
        return None, 0.0
    return glp_update_pure(psi, f0, d).vector, p0


def axm_premeasurement(psi, a0obs: GeneralizedObservable, d: DetectionModel,
                       pointer: PointerBasis | None = None,
                       phases: AxmPhases | None = None) -> StateVector:
    """Premeasurement vector on the system-pointer product space.

    Parameters
    ----------
    psi : PureState or StateVector
        Initial system state; the pointer starts in its no-registration
        position.
    a0obs, d : measurement context
        Generalized observable and detection model.
    pointer : PointerBasis, optional
        Defaults to the canonical basis with one vector per outcome.
    phases : AxmPhases, optional
        Defaults to all-zero phases (real nonnegative amplitudes).

    The output is normalized because the weight missing from the detection
    amplitudes is exactly the overall probability of the no-registration
    branch.
    """
    state = psi if isinstance(psi, PureState) else PureState(psi)
    base = a0obs.base
    n_eigs = len(base.eigenvalues)
    if pointer is None:
        pointer = PointerBasis.canonical(n_eigs + 1)
    if pointer.count != n_eigs + 1:
        raise PointerCountMismatch(
            f"{pointer.count} pointer states for {n_eigs + 1} outcomes"
        )
    if phases is None:
        phases = AxmPhases.zero(n_eigs)
    if len(phases.theta) != n_eigs:
        raise DimensionMismatch("one phase per eigenvalue branch required")

    v = state.vector.amplitudes
    d_sys, d_ptr = base.dim, pointer.dim
    out = np.zeros(d_sys * d_ptr, dtype=complex)
    for n, (value, proj) in enumerate(base.spectrum):
        alpha = np.sqrt(d.rate(state.label, a0obs, value)) * np.exp(1j * phases.theta[n])
        branch = proj.matrix @ v
        out += alpha * np.kron(branch, pointer.vectors[n + 1].amplitudes)
    psi_f0, p0 = no_detection_update(state, a0obs, d)
    if psi_f0 is not None:
        beta = np.sqrt(p0) * np.exp(1j * phases.phi0)
        out += beta * np.kron(psi_f0.amplitudes, pointer.vectors[0].amplitudes)
    return StateVector(out)


def reduced_post_state(Psi: StateVector, dims: Sequence[int]) -> DensityOperator:
    """System state after the premeasurement: pointer traced out."""
    d_sys, d_ptr = int(dims[0]), int(dims[1])
    if Psi.dim != d_sys * d_ptr:
        raise DimensionMismatch(f"composite dimension {Psi.dim} != {d_sys} * {d_ptr}")
    return partial_trace(Psi.density(), (d_sys, d_ptr), keep="A")


def nonselective_post_state(s, a0obs: GeneralizedObservable,
                            d: DetectionModel) -> DensityOperator:
    """Closed-form reduced state after a nonselective idealized measurement.

    The no-registration branch contributes its overall probability times its
    updated state; each eigenvalue branch contributes the detection-weighted
    projected state. Defined for pure states and improper mixtures; it
    matches :func:`reduced_post_state` of the premeasurement vector.
    """
    state = _single_state(s)
    rho = state.rho
    out = np.zeros_like(rho)
    for value, proj in a0obs.base.spectrum:
        rate = d.rate(state.label, a0obs, value)
        out = out + rate * (proj.matrix @ rho @ proj.matrix)
    f0 = PhysicalProperty(a0obs, {a0obs.a0})
    p0 = overall_prob(state, f0, d)
    if p0 > PROB_FLOOR:
        out = out + p0 * glp_update(state, f0, d).matrix
    return DensityOperator(out)


def linearized_premeasurement(psi, a0obs: GeneralizedObservable,
                              alphas: Sequence[complex],
                              betas: Sequence[complex],
                              targets: Sequence[np.ndarray] | None = None,
                              pointer: PointerBasis | None = None) -> StateVector:
    """Premeasurement induced by a linear unitary on the product space.

    ``alphas[n]`` and ``betas[n]`` are the detected / undetected amplitudes
    of the n-th eigenvalue branch and must satisfy
    ``|alpha|^2 + |beta|^2 = 1`` per branch. ``targets[n]`` holds the
    no-registration destination vectors, one column per eigenbasis vector of
    the branch; by default each eigenbasis vector maps onto itself. The map
    acts linearly on the system state by construction, and coincides with
    :func:`axm_premeasurement` exactly when a detection model reproduces the
    branch amplitudes uniformly within each eigenspace.
    """
    state = psi if isinstance(psi, PureState) else PureState(psi)
    base = a0obs.base
    n_eigs = len(base.eigenvalues)
    if len(alphas) != n_eigs or len(betas) != n_eigs:
        raise DimensionMismatch("one (alpha, beta) pair per eigenvalue required")
    for a, b in zip(alphas, betas):
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-10:
            raise NormalizationViolation(
                f"|{a}|^2 + |{b}|^2 != 1 on an eigenvalue branch"
            )
    if targets is None:
        targets = base.eigenbasis
    if pointer is None:
        pointer = PointerBasis.canonical(n_eigs + 1)
    if pointer.count != n_eigs + 1:
        raise PointerCountMismatch(
            f"{pointer.count} pointer states for {n_eigs + 1} outcomes"
        )

    v = state.vector.amplitudes
    out = np.zeros(base.dim * pointer.dim, dtype=complex)
    for n in range(n_eigs):
        basis = base.eigenbasis[n]
        coeffs = basis.conj().T @ v  # expansion within the n-th eigenspace
        detected = basis @ coeffs
        undetected = np.asarray(targets[n], dtype=complex) @ coeffs
        out += alphas[n] * np.kron(detected, pointer.vectors[n + 1].amplitudes)
        out += betas[n] * np.kron(undetected, pointer.vectors[0].amplitudes)
    return StateVector(out)


@dataclass(frozen=True)
class NonlinearityReport:
    """Purity diagnostics of a reduced post-measurement state."""

    purity: float
    is_pure: bool
    bo_violation: float


def nonlinearity_certificate(rho_tilde: DensityOperator,
                             observable=None) -> NonlinearityReport:
    """Certify that a reduced post-measurement state is not pure.

    ``bo_violation`` is the largest residual, over pairs of outcome-basis
    indices, of the factorization identity that the matrix elements of a
    rank-1 operator must satisfy: the product of two diagonal entries minus
    the squared modulus of the corresponding off-diagonal entry. It vanishes
    exactly on pure states and is strictly positive as soon as detection is
    possible but not certain.

    When ``observable`` is given the matrix elements are read in its
    eigenbasis; otherwise in the computational basis.
    """
    rho = rho_tilde.matrix
    if observable is not None:
        base = getattr(observable, "base", observable)
        basis = np.hstack(base.eigenbasis)
        rho = basis.conj().T @ rho @ basis
    diag = np.real(np.diag(rho))
    dim = rho.shape[0]
    violation = 0.0
    for n in range(dim):
        for np_ in range(n + 1, dim):
            residual = float(abs(diag[n] * diag[np_] - abs(rho[n, np_]) ** 2))
            violation = max(violation, residual)
    purity = rho_tilde.purity()
    return NonlinearityReport(purity=purity, is_pure=purity >= 1.0 - 1e-9,
                              bo_violation=violation)
