"""State transformations under idealized measurements.

``lueders_qm`` is the textbook projection-postulate update. ``glp_update``
generalizes it by conjugating with the detection-weighted effect operator
instead of the bare projector, which also covers the no-registration branch:
an object can change state even when it is not detected, unless the
detection probabilities are uniform across the spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import AllBranchesZero, ContainsNoRegistration, ZeroProbabilityBranch
from .hilbert import DensityOperator, StateVector
from .observables import GeneralizedObservable, PhysicalProperty, projector_for
from .probability import (
    PROB_FLOOR,
    DetectionModel,
    ImproperMixture,
    ProperMixture,
    PureState,
    _single_state,
    effect_operator,
    overall_prob,
)


@dataclass(frozen=True)
class MeasurementOutcome:
    """One sampled measurement: outcome value, yes/no label, post state."""

    outcome_value: float
    result_label: str  # "yes" for a registered eigenvalue, "no" for no-registration
    post_state: Union[PureState, ImproperMixture]


def lueders_qm(s, f: PhysicalProperty) -> DensityOperator:
    """Quantum-reference state update P rho P / Tr[P rho P].

    Applying the update twice gives the same state as applying it once.
    """
    state = _single_state(s)
    if f.contains_a0:
        raise ContainsNoRegistration("the quantum update needs a detection-free property")
    p = projector_for(f).matrix
    num = p @ state.rho @ p
    tr = float(np.real(np.trace(num)))
    if tr <= PROB_FLOOR:
        raise ZeroProbabilityBranch(f"property has probability {tr!r} in this state")
    return DensityOperator(num / tr)


def glp_update(s, f: PhysicalProperty, d: DetectionModel) -> DensityOperator:
    """Generalized state update T rho T / Tr[T rho T] after a *yes* result.

    ``T`` is the effect operator of the property under the detection model.
    Whenever ``T`` restricted to the support of the state is a positive
    multiple of the corresponding projector, the scalars cancel and the
    result coincides with :func:`lueders_qm`.
    """
    state = _single_state(s)
    t = effect_operator(state, f.observable, f.sigma, d)
    num = t @ state.rho @ t
    tr = float(np.real(np.trace(num)))
    if tr <= PROB_FLOOR:
        raise ZeroProbabilityBranch(f"yes branch has probability {tr!r} in this state")
    return DensityOperator(num / tr)


def glp_update_pure(s: PureState, f: PhysicalProperty, d: DetectionModel,
                    label: str | None = None) -> PureState:
    """Vector-level generalized update; pure states stay pure under it."""
    t = effect_operator(s, f.observable, f.sigma, d)
    v = t @ s.vector.amplitudes
    norm = np.linalg.norm(v)
    if norm**2 <= PROB_FLOOR:
        raise ZeroProbabilityBranch("yes branch has zero amplitude in this state")
    return PureState(StateVector(v / norm), label=label)


def outcome_distribution(s, a0obs: GeneralizedObservable,
                         d: DetectionModel) -> list[tuple[float, float]]:
    """Overall probabilities of every single outcome, no-registration first.

    The probabilities sum to 1: whatever weight detection removes from the
    eigenvalue outcomes is carried by the no-registration entry. Each entry
    equals the overall probability of the corresponding singleton property.
    """
    state = _single_state(s)
    rho = state.rho
    entries = []
    p0 = 1.0
    for value, proj in a0obs.base.spectrum:
        rate = DetectionModel._checked(
            d.rate(state.label, a0obs, value), f"outcome {value}")
        p = rate * float(np.real(np.einsum("ij,ji->", rho, proj.matrix)))
        entries.append((value, p))
        p0 -= p
    return [(a0obs.a0, p0)] + entries


def sample_outcome(s, a0obs: GeneralizedObservable, d: DetectionModel,
                   rng_seed: int) -> MeasurementOutcome:
    """Draw one outcome and the matching post state, reproducibly per seed.

    Concurrent sampling should use independent seeds; the convention is
    ``seed + trial_index`` per trial.
    """
    state = _single_state(s)
    dist = outcome_distribution(state, a0obs, d)
    values = [v for v, _ in dist]
    probs = np.clip([p for _, p in dist], 0.0, None)
    rng = np.random.default_rng(rng_seed)
    edges = np.cumsum(probs)
    k = min(int(np.searchsorted(edges, rng.random() * edges[-1], side="right")),
            len(values) - 1)
    outcome = values[k]
    singleton = PhysicalProperty(a0obs, {outcome})
    if isinstance(state, PureState):
        post: Union[PureState, ImproperMixture] = glp_update_pure(state, singleton, d)
    else:
        post = ImproperMixture(glp_update(state, singleton, d))
    label = "no" if outcome == a0obs.a0 else "yes"
    return MeasurementOutcome(outcome, label, post)


def proper_mixture_update(m: ProperMixture, f: PhysicalProperty,
                          d: DetectionModel) -> ProperMixture:
    """Yes-branch update of a proper mixture.

    Each component is updated by the generalized rule under its own
    detection row, and the weights are reweighted by the components' overall
    probabilities for the property. Components whose yes branch is
    impossible drop out; components mapped onto the same state merge. On a
    single-component mixture this reduces exactly to :func:`glp_update`.
    """
    updated: list[tuple[float, Union[PureState, ImproperMixture]]] = []
    for weight, comp in m.components:
        p_t = overall_prob(comp, f, d)
        if p_t <= PROB_FLOOR:
            continue
        if isinstance(comp, PureState):
            post: Union[PureState, ImproperMixture] = glp_update_pure(comp, f, d)
        else:
            post = ImproperMixture(glp_update(comp, f, d))
        updated.append((weight * p_t, post))
    if not updated:
        raise AllBranchesZero("no component has a nonzero yes branch")
    # merge components that landed on the same state
    merged: list[tuple[float, Union[PureState, ImproperMixture]]] = []
    for weight, state in updated:
        for i, (w_prev, prev) in enumerate(merged):
            if np.allclose(state.rho, prev.rho, atol=1e-12):
                merged[i] = (w_prev + weight, prev)
                break
        else:
            merged.append((weight, state))
    total = sum(w for w, _ in merged)
    return ProperMixture([(w / total, state) for w, state in merged])
