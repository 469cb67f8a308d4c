"""Microscopic (hidden-variable) layer underneath the macroscopic probabilities.

Individual objects carry a set of microscopic properties, each mapped
one-to-one onto a macroscopic physical property. The microscopic state fixes
whether the object *would display* a property (0/1, value definite) and with
what probability it is detected; averaging over microscopic states with the
state-conditional weights reproduces the macroscopic overall and detection
probabilities, and their ratio the conditional one. Detection here depends
only on the microscopic state and the property, never on the measurement
context.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import UndefinedRatio, UnregisteredProperty
from .observables import ObservableRegistry, PhysicalProperty, property_from_json

# Conditional weights must sum to 1 per macroscopic state within this.
WEIGHT_ATOL = 1e-12


@dataclass(frozen=True)
class MicroProperty:
    """A hidden dichotomic variable and the physical property it realizes."""

    id: str
    macro: PhysicalProperty


@dataclass(frozen=True)
class MicroState:
    """The set of microscopic properties possessed by an individual object."""

    possessed: frozenset[str]

    @classmethod
    def of(cls, *ids: str) -> "MicroState":
        return cls(frozenset(ids))


class MicroModel:
    """A finite hidden-variable model.

    Parameters
    ----------
    properties : iterable of MicroProperty
        The registered hidden variables; their macroscopic images must be
        pairwise distinct so the correspondence is invertible.
    microstates : sequence of MicroState
        Every microscopic state the model can produce.
    cond : mapping state_label -> sequence of weights
        Conditional probability of each microstate given the macroscopic
        state, indexed like ``microstates``; each row sums to 1.
    detect : mapping
        Detection probabilities, either flat ``{(index, property_id): p}``
        or nested ``{index: {property_id: p}}``; required complete over
        microstates x properties.
    deterministic : bool
        Declares that every detection probability is exactly 0 or 1.
    """

    def __init__(self, properties: Iterable[MicroProperty],
                 microstates: Sequence[MicroState],
                 cond: Mapping[str, Sequence[float]],
                 detect: Mapping,
                 deterministic: bool = False):
        self.properties: dict[str, MicroProperty] = {}
        seen_macro: dict[PhysicalProperty, str] = {}
        for prop in properties:
            if prop.id in self.properties:
                raise ValueError(f"duplicate micro property id {prop.id!r}")
            if prop.macro in seen_macro:
                raise ValueError(
                    f"micro properties {seen_macro[prop.macro]!r} and {prop.id!r} "
                    "share a macroscopic image; the correspondence must be bijective"
                )
            self.properties[prop.id] = prop
            seen_macro[prop.macro] = prop.id

        self.microstates: tuple[MicroState, ...] = tuple(microstates)
        ids = set(self.properties)
        for i, sm in enumerate(self.microstates):
            unknown = sm.possessed - ids
            if unknown:
                raise ValueError(f"microstate {i} possesses unregistered ids {sorted(unknown)}")

        self.cond: dict[str, tuple[float, ...]] = {}
        for label, weights in cond.items():
            row = tuple(float(w) for w in weights)
            if len(row) != len(self.microstates):
                raise ValueError(f"state {label!r}: expected {len(self.microstates)} weights")
            if any(w < 0 or w > 1 for w in row):
                raise ValueError(f"state {label!r}: weights outside [0, 1]")
            if abs(sum(row) - 1.0) > WEIGHT_ATOL:
                raise ValueError(f"state {label!r}: weights sum to {sum(row)!r}, not 1")
            self.cond[label] = row

        flat: dict[tuple[int, str], float] = {}
        first = next(iter(detect.values()), None)
        if isinstance(first, Mapping) or (first is None and not detect):
            for index, row in detect.items():
                for pid, p in row.items():
                    flat[(int(index), str(pid))] = float(p)
        else:
            flat = {(int(i), str(pid)): float(p) for (i, pid), p in detect.items()}
        for key, p in flat.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"detection probability {p} for {key} outside [0, 1]")
        missing = [
            (i, pid)
            for i in range(len(self.microstates))
            for pid in self.properties
            if (i, pid) not in flat
        ]
        if missing:
            raise ValueError(f"detection table incomplete, missing {missing[:5]}...")
        if deterministic and any(p not in (0.0, 1.0) for p in flat.values()):
            raise ValueError("deterministic model requires detection values in {0, 1}")
        self.detect = flat
        self.deterministic = bool(deterministic)

    @property
    def state_labels(self) -> tuple[str, ...]:
        return tuple(self.cond)

    def property_for(self, f: PhysicalProperty) -> MicroProperty:
        """Inverse of the micro-to-macro correspondence."""
        for prop in self.properties.values():
            if prop.macro == f:
                return prop
        raise UnregisteredProperty(f"no micro counterpart registered for {f!r}")

    def index_of(self, sm: MicroState) -> int:
        try:
            return self.microstates.index(sm)
        except ValueError:
            raise ValueError(f"{sm!r} is not one of the model's microstates") from None

    def detection(self, sm: MicroState | int, f: PhysicalProperty) -> float:
        index = sm if isinstance(sm, int) else self.index_of(sm)
        return self.detect[(index, self.property_for(f).id)]


def micro_conditional(sm: MicroState, f: PhysicalProperty, model: MicroModel) -> int:
    """1 if the microstate possesses the property's hidden counterpart, else 0."""
    return int(model.property_for(f).id in sm.possessed)


def micro_overall(sm: MicroState, f: PhysicalProperty, model: MicroModel) -> float:
    """Detection probability times the 0/1 display value."""
    return model.detection(sm, f) * micro_conditional(sm, f, model)


class AggregateResult(NamedTuple):
    overall: float
    detection: float
    conditional: float


def aggregate(state_label: str, f: PhysicalProperty, model: MicroModel) -> AggregateResult:
    """Macroscopic (overall, detection, conditional) probabilities.

    Overall and detection probabilities are microstate averages under the
    state-conditional weights; the conditional one is their ratio, so the
    product identity holds by construction. Raises :class:`UndefinedRatio`
    when nothing is ever detected.
    """
    weights = model.cond[state_label]
    pid = model.property_for(f).id
    p_t = 0.0
    p_d = 0.0
    for i, sm in enumerate(model.microstates):
        det = model.detect[(i, pid)]
        p_d += weights[i] * det
        if pid in sm.possessed:
            p_t += weights[i] * det
    if p_d <= 0.0:
        raise UndefinedRatio(f"detection probability vanishes for state {state_label!r}")
    return AggregateResult(p_t, p_d, p_t / p_d)


def aggregate_complement(state_label: str, f: PhysicalProperty,
                         model: MicroModel) -> float:
    """Overall probability of a property containing the no-registration outcome.

    Computed as one minus the overall probability of the complementary
    detection-free property, which must be registered in the model.
    """
    from .observables import complement

    if not f.contains_a0:
        raise ValueError("property must contain the no-registration outcome; "
                         "use aggregate() otherwise")
    return 1.0 - aggregate(state_label, complement(f), model).overall


@dataclass(frozen=True)
class IndividualDraw:
    """One simulated measurement on one individual object."""

    detected: bool
    displays: bool


def sample_individual(state_label: str, f: PhysicalProperty, model: MicroModel,
                      seed: int) -> IndividualDraw:
    """Simulate one object: draw its microstate, then its detection.

    The object displays the property iff it is detected *and* possesses the
    hidden counterpart. Reproducible per seed; independent trials should use
    ``seed + trial_index``.
    """
    rng = np.random.default_rng(seed)
    weights = model.cond[state_label]
    pid = model.property_for(f).id
    i = int(rng.choice(len(model.microstates), p=np.asarray(weights)))
    detected = bool(rng.random() < model.detect[(i, pid)])
    displays = detected and pid in model.microstates[i].possessed
    return IndividualDraw(detected=detected, displays=displays)


def sample_statistics(state_label: str, f: PhysicalProperty, model: MicroModel,
                      n: int, seed: int) -> AggregateResult:
    """Empirical (overall, detection, conditional) frequencies over n objects.

    Vectorized batch draw from a single generator seeded with ``seed``;
    deterministic for fixed inputs.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    weights = np.asarray(model.cond[state_label])
    pid = model.property_for(f).id
    det_by_state = np.array([model.detect[(i, pid)] for i in range(len(model.microstates))])
    has_by_state = np.array([pid in sm.possessed for sm in model.microstates])
    drawn = rng.choice(len(model.microstates), size=n, p=weights)
    detected = rng.random(n) < det_by_state[drawn]
    displays = detected & has_by_state[drawn]
    n_det = int(detected.sum())
    if n_det == 0:
        raise UndefinedRatio("no trial was detected; conditional frequency undefined")
    return AggregateResult(displays.sum() / n, n_det / n, displays.sum() / n_det)


@dataclass(frozen=True)
class ConsistencyMismatch:
    state: str
    property_id: str
    quantity: str  # "overall" | "detection" | "conditional"
    micro_value: float
    macro_value: float


def consistency_check(model: MicroModel,
                      macro: Mapping[tuple[str, str], tuple[float, float, float]],
                      tol: float = 1e-12) -> list[ConsistencyMismatch]:
    """Compare the model's aggregates against macroscopic probability tables.

    ``macro`` maps ``(state_label, property_id)`` to the expected
    ``(overall, detection, conditional)`` triple, typically computed with
    the probability operations. An empty report means the hidden-variable
    model reproduces the macroscopic model on the shared registry.
    """
    report: list[ConsistencyMismatch] = []
    for (state, pid), expected in macro.items():
        prop = model.properties[pid]
        got = aggregate(state, prop.macro, model)
        for quantity, mine, target in zip(
            ("overall", "detection", "conditional"), got, expected
        ):
            if abs(mine - target) > tol:
                report.append(ConsistencyMismatch(state, pid, quantity, mine, target))
    return report


def micromodel_from_json(data: dict, registry: ObservableRegistry) -> MicroModel:
    """Build a micro model from its JSON description.

    Expected shape::

        {"micro_properties": [{"id": ..., "macro": {"observable": ..., "sigma": [...]}}],
         "microstates": [["id", ...], ...],
         "cond": {state_label: {"<index>": weight, ...}},
         "detect": {"<index>": {property_id: p, ...}},
         "deterministic": bool}

    Microstates are lists of possessed property ids; conditional weights may
    be sparse (missing indices mean zero).
    """
    props = [
        MicroProperty(p["id"], property_from_json(p["macro"], registry))
        for p in data["micro_properties"]
    ]
    states = [MicroState(frozenset(ids)) for ids in data["microstates"]]
    cond = {}
    for label, row in data["cond"].items():
        weights = [0.0] * len(states)
        for index, w in row.items():
            weights[int(index)] = float(w)
        cond[label] = weights
    detect = {int(i): dict(row) for i, row in data["detect"].items()}
    return MicroModel(props, states, cond, detect,
                      deterministic=data.get("deterministic", False))
