"""The three-probability algebra of detection-conditioned measurements.

For a state S and a physical property F three numbers are tracked:

* ``conditional_prob`` -- probability of *yes* among detected objects only;
  for pure states and improper mixtures this is the Born value.
* ``detection_prob``   -- probability that the object is detected at all.
* ``overall_prob``     -- probability of *yes* over every object produced;
  the product of the other two.

Overall probabilities are generated by state-indexed effect operators built
from per-outcome detection probabilities; for each state the map from
outcome sets to effects is a commutative POV measure. Proper mixtures are
not reducible to a single density operator here: they carry a
property-indexed density plus a detection probability of their own.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, NamedTuple, Union

import numpy as np

from .errors import (
    ComponentUndetectable,
    ContainsNoRegistration,
    DetectionOutOfRange,
    UndefinedRatio,
)
from .hilbert import DEGENERACY_GAP, DensityOperator, StateVector
from .observables import GeneralizedObservable, PhysicalProperty, projector_for

# Below this a probability is treated as exactly zero when it appears in a
# denominator; ratios against smaller values are 0/0 and raise instead.
PROB_FLOOR = 1e-12


# --- detection models --------------------------------------------------------

class DetectionModel:
    """Per-state, per-observable, per-eigenvalue detection probabilities.

    ``rate`` returns the probability that an object in the labelled state is
    detected when the measured outcome would be the given eigenvalue. Values
    are validated into [0, 1]; models are immutable after construction.
    """

    def rate(self, state_label: str | None, observable: GeneralizedObservable,
             eigenvalue: float) -> float:
        raise NotImplementedError

    @staticmethod
    def _checked(p: float, context: str) -> float:
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise DetectionOutOfRange(f"detection probability {p} for {context} outside [0, 1]")
        return p


class ConstantDetection(DetectionModel):
    """One efficiency value for every state, observable and outcome."""

    def __init__(self, eta: float):
        self.eta = self._checked(eta, "constant model")

    def rate(self, state_label, observable, eigenvalue) -> float:
        return self.eta

    def __repr__(self) -> str:
        return f"ConstantDetection(eta={self.eta})"


class PerOutcomeDetection(DetectionModel):
    """Detection probability depending on the outcome value only."""

    def __init__(self, table: Mapping[float, float], default: float | None = None):
        self.table = {float(k): self._checked(v, f"outcome {k}") for k, v in table.items()}
        self.default = None if default is None else self._checked(default, "default")

    def rate(self, state_label, observable, eigenvalue) -> float:
        for key, p in self.table.items():
            if abs(key - eigenvalue) <= DEGENERACY_GAP:
                return p
        if self.default is not None:
            return self.default
        raise KeyError(f"no detection entry for outcome {eigenvalue}")

    def __repr__(self) -> str:
        return f"PerOutcomeDetection({self.table})"


class PerStateOutcomeDetection(DetectionModel):
    """Fully general model keyed by (state label, observable name, outcome).

    ``entries`` may be a mapping from such triples to probabilities, or a
    callable with the same signature as :meth:`DetectionModel.rate`. States
    are identified by their registry label, never by vector value.
    """

    def __init__(self,
                 entries: Union[Mapping[tuple, float], Callable[..., float]],
                 default: float | None = None):
        if callable(entries):
            self._fn = entries
            self._table = None
        else:
            self._fn = None
            self._table = {
                (state, name, float(outcome)): self._checked(p, f"{state}/{name}/{outcome}")
                for (state, name, outcome), p in entries.items()
            }
        self.default = None if default is None else self._checked(default, "default")

    def rate(self, state_label, observable, eigenvalue) -> float:
        if self._fn is not None:
            return self._checked(self._fn(state_label, observable, eigenvalue),
                                 f"{state_label}/{observable.name}/{eigenvalue}")
        if state_label is None:
            raise KeyError("state has no label; per-state detection lookup impossible")
        for (state, name, outcome), p in self._table.items():
            if state == state_label and name == observable.name \
                    and abs(outcome - eigenvalue) <= DEGENERACY_GAP:
                return p
        if self.default is not None:
            return self.default
        raise KeyError(
            f"no detection entry for ({state_label!r}, {observable.name!r}, {eigenvalue})"
        )


def detection_from_json(data: dict) -> DetectionModel:
    """Build a detection model from its JSON description."""
    kind = data.get("kind")
    if kind == "constant":
        return ConstantDetection(data["eta"])
    if kind == "per_outcome":
        table = {float(k): v for k, v in data["table"].items()}
        return PerOutcomeDetection(table, default=data.get("default"))
    if kind == "per_state_outcome":
        entries = {
            (e["state"], e["observable"], float(e["outcome"])): e["p"]
            for e in data["entries"]
        }
        return PerStateOutcomeDetection(entries, default=data.get("default"))
    raise ValueError(f"unknown detection model kind {kind!r}")


# --- states ------------------------------------------------------------------

class PureState:
    """A labelled pure state."""

    def __init__(self, vector: StateVector | Iterable[complex], label: str | None = None):
        self.vector = vector if isinstance(vector, StateVector) else StateVector(vector)
        self.label = label

    @property
    def rho(self) -> np.ndarray:
        v = self.vector.amplitudes
        return np.outer(v, v.conj())

    @property
    def dim(self) -> int:
        return self.vector.dim

    def __repr__(self) -> str:
        return f"PureState(label={self.label!r}, dim={self.dim})"


class ImproperMixture:
    """A labelled improper mixture (e.g. a reduced state of a larger system).

    Behaves like a generalized pure state: it is represented by a single
    density operator and its detection probabilities are looked up under its
    own label, exactly as for pure states.
    """

    def __init__(self, rho: DensityOperator | np.ndarray, label: str | None = None):
        self.density = rho if isinstance(rho, DensityOperator) else DensityOperator(rho)
        self.label = label

    @property
    def rho(self) -> np.ndarray:
        return self.density.matrix

    @property
    def dim(self) -> int:
        return self.density.dim

    def __repr__(self) -> str:
        return f"ImproperMixture(label={self.label!r}, dim={self.dim})"


class ProperMixture:
    """A statistical (epistemic) ensemble of states with fixed weights."""

    def __init__(self, components: Iterable[tuple[float, Union[PureState, ImproperMixture]]],
                 label: str | None = None):
        comps = []
        for weight, state in components:
            weight = float(weight)
            if not 0.0 < weight <= 1.0:
                raise ValueError(f"component weight {weight} outside (0, 1]")
            if not isinstance(state, (PureState, ImproperMixture)):
                raise TypeError("mixture components must be PureState or ImproperMixture")
            comps.append((weight, state))
        if not comps:
            raise ValueError("proper mixture needs at least one component")
        total = sum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"component weights sum to {total!r}, not 1")
        self.components: tuple[tuple[float, Union[PureState, ImproperMixture]], ...] = tuple(comps)
        self.label = label

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for w, _ in self.components)

    @property
    def dim(self) -> int:
        return self.components[0][1].dim

    def __len__(self) -> int:
        return len(self.components)

    def __repr__(self) -> str:
        return f"ProperMixture(label={self.label!r}, n={len(self)})"


EsrState = Union[PureState, ImproperMixture, ProperMixture]


def _single_state(s) -> Union[PureState, ImproperMixture]:
    if isinstance(s, (PureState, ImproperMixture)):
        return s
    if isinstance(s, ProperMixture):
        raise TypeError(
            "proper mixtures are not represented by one density operator; "
            "use the proper_mixture_* operations"
        )
    if isinstance(s, StateVector):
        return PureState(s)
    if isinstance(s, DensityOperator):
        return ImproperMixture(s)
    raise TypeError(f"not a state: {type(s).__name__}")


def state_from_json(data: dict) -> EsrState:
    """Build a state from its JSON description."""
    from .hilbert import matrix_from_json, vector_from_json

    kind = data.get("kind")
    if kind == "pure":
        return PureState(vector_from_json(data["vector"]), label=data.get("label"))
    if kind == "improper":
        return ImproperMixture(DensityOperator(matrix_from_json(data["matrix"])),
                               label=data.get("label"))
    if kind == "proper":
        comps = [(c["weight"], _single_state(state_from_json(c["state"])))
                 for c in data["components"]]
        return ProperMixture(comps, label=data.get("label"))
    raise ValueError(f"unknown state kind {kind!r}")


# --- probability mappings (pure states and improper mixtures) ----------------

def conditional_prob(s, f: PhysicalProperty) -> float:
    """Born probability of the property among detected objects.

    Only defined for outcome sets without the no-registration value and for
    states represented by a single density operator.
    """
    state = _single_state(s)
    if f.contains_a0:
        raise ContainsNoRegistration(
            "conditional probability is undefined when sigma contains the "
            "no-registration outcome"
        )
    p = projector_for(f)
    return float(np.real(np.trace(state.rho @ p.matrix)))


def effect_operator(s, a0obs: GeneralizedObservable, sigma: Iterable[float],
                    d: DetectionModel) -> np.ndarray:
    """Effect operator generating the overall probability of ``sigma``.

    For outcome sets without the no-registration value this is the detection
    weighted sum of spectral projectors; with it, the complement against the
    identity. Over disjoint outcome sets the map is additive and assigns the
    identity to the full outcome list, i.e. it is a POV measure.
    """
    state = _single_state(s)
    snapped = {a0obs.snap(v) for v in sigma}
    base = a0obs.base

    def rate(value: float) -> float:
        return DetectionModel._checked(
            d.rate(state.label, a0obs, value), f"outcome {value}")

    if a0obs.a0 not in snapped:
        total = np.zeros_like(base.matrix)
        for value, proj in base.spectrum:
            if value in snapped:
                total = total + rate(value) * proj.matrix
        return total
    total = np.eye(base.dim, dtype=complex)
    for value, proj in base.spectrum:
        if value not in snapped:
            total = total - rate(value) * proj.matrix
    return total


def overall_prob(s, f: PhysicalProperty, d: DetectionModel) -> float:
    """Probability of *yes* over all produced objects, detected or not."""
    state = _single_state(s)
    t = effect_operator(state, f.observable, f.sigma, d)
    return float(np.real(np.trace(state.rho @ t)))


def detection_prob(s, f: PhysicalProperty, d: DetectionModel) -> float:
    """Probability that the object is detected when ``f`` is measured.

    Defined as the ratio overall / conditional; raises
    :class:`UndefinedRatio` when the conditional probability vanishes, since
    the ratio is then 0/0.
    """
    if f.contains_a0:
        raise ContainsNoRegistration(
            "detection probability is only defined for detection-free properties"
        )
    cond = conditional_prob(s, f)
    if cond <= PROB_FLOOR:
        raise UndefinedRatio(
            f"conditional probability {cond!r} vanishes; detection ratio is 0/0"
        )
    return overall_prob(s, f, d) / cond


# --- proper mixtures ----------------------------------------------------------

class MixtureProbabilities(NamedTuple):
    conditional: float
    detection: float
    overall: float


def proper_mixture_density(m: ProperMixture, f: PhysicalProperty,
                           d: DetectionModel) -> DensityOperator:
    """Property-indexed density operator of a proper mixture.

    Components are reweighted by their detection probability for ``f`` and
    renormalized; with a detection model that is constant across components
    the weights are unchanged.
    """
    if f.contains_a0:
        raise ContainsNoRegistration("mixture density is defined on detection-free properties")
    proj = projector_for(f).matrix
    terms = []
    for weight, comp in m.components:
        rho = comp.rho
        cond = float(np.real(np.trace(rho @ proj)))
        if cond <= PROB_FLOOR:
            raise ComponentUndetectable(
                f"component {comp.label!r} has zero conditional probability; "
                "its detection reweighting is undefined"
            )
        t = effect_operator(comp, f.observable, f.sigma, d)
        ratio = float(np.real(np.trace(rho @ t))) / cond
        terms.append((weight * ratio, rho))
    norm = sum(w for w, _ in terms)
    mixed = sum(w * rho for w, rho in terms) / norm
    return DensityOperator(mixed)


def proper_mixture_probs(m: ProperMixture, f: PhysicalProperty,
                         d: DetectionModel) -> MixtureProbabilities:
    """Conditional, detection and overall probabilities of a proper mixture.

    The detection probability is the weight-averaged component detection
    probability; the overall probability is the product of the other two, so
    the product identity holds by construction.
    """
    rho_f = proper_mixture_density(m, f, d)
    proj = projector_for(f).matrix
    conditional = float(np.real(np.trace(rho_f.matrix @ proj)))
    detection = sum(w * detection_prob(comp, f, d) for w, comp in m.components)
    return MixtureProbabilities(conditional, detection, detection * conditional)
