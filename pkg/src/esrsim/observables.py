"""Generalized observables and physical properties.

A generalized observable is an ordinary quantum observable extended with an
extra *no-registration* outcome ``a0`` that stands for "the measurement did
not detect the object at all". A physical property pairs a generalized
observable with a subset of its outcome values; properties whose subset
avoids ``a0`` correspond one-to-one to ordinary quantum properties.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import ContainsNoRegistration, OutcomeCollision
from .hilbert import (
    DEGENERACY_GAP,
    Projector,
    as_cmatrix,
    eigen_clusters,
    matrix_from_json,
    matrix_to_json,
)


class Observable:
    """A quantum observable: Hermitian matrix plus merged spectral data.

    The spectrum is computed once at construction; degenerate eigenvalues
    (gap below ``DEGENERACY_GAP``) share a single projector. ``eigenbasis``
    keeps one orthonormal-column block per distinct eigenvalue, which the
    composite-system machinery uses to expand states eigenspace by
    eigenspace.
    """

    def __init__(self, name: str, matrix):
        self.name = str(name)
        self.matrix = as_cmatrix(matrix)
        clusters = eigen_clusters(self.matrix)
        self.eigenvalues: tuple[float, ...] = tuple(v for v, _ in clusters)
        self.eigenbasis: tuple[np.ndarray, ...] = tuple(b for _, b in clusters)
        self.projectors: tuple[Projector, ...] = tuple(
            Projector(b @ b.conj().T) for _, b in clusters
        )

    @property
    def spectrum(self) -> tuple[tuple[float, Projector], ...]:
        return tuple(zip(self.eigenvalues, self.projectors))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def projector_onto(self, values: Iterable[float]) -> np.ndarray:
        """Sum of the spectral projectors for the given eigenvalues."""
        wanted = set(values)
        total = np.zeros_like(self.matrix)
        for value, proj in self.spectrum:
            if value in wanted:
                total = total + proj.matrix
        return total

    def __repr__(self) -> str:
        return f"Observable({self.name!r}, dim={self.dim}, outcomes={self.eigenvalues})"


class GeneralizedObservable:
    """An observable together with its no-registration outcome value."""

    def __init__(self, base: Observable, a0: float):
        a0 = float(a0)
        for value in base.eigenvalues:
            if abs(value - a0) <= DEGENERACY_GAP:
                raise OutcomeCollision(
                    f"no-registration outcome {a0} collides with eigenvalue {value}"
                )
        self.base = base
        self.a0 = a0

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def outcomes(self) -> tuple[float, ...]:
        """All outcome values, the no-registration one first."""
        return (self.a0,) + self.base.eigenvalues

    def snap(self, value: float) -> float:
        """Canonical outcome value matching ``value`` within the merge gap."""
        value = float(value)
        for outcome in self.outcomes:
            if abs(value - outcome) <= DEGENERACY_GAP:
                return outcome
        raise ValueError(f"{value} is not an outcome of {self.name!r}")

    def __repr__(self) -> str:
        return f"GeneralizedObservable({self.name!r}, a0={self.a0})"


def make_generalized(base: Observable, a0: float | None = None) -> GeneralizedObservable:
    """Adjoin a no-registration outcome to an observable.

    When ``a0`` is omitted the convention ``min(spectrum) - 1`` is used.
    Raises :class:`OutcomeCollision` if ``a0`` matches an eigenvalue.
    """
    if a0 is None:
        a0 = min(base.eigenvalues) - 1.0
    return GeneralizedObservable(base, a0)


class PhysicalProperty:
    """Dichotomic test "the outcome of A0 lies in sigma".

    ``sigma`` is stored as a frozenset of canonical outcome values (each
    element snapped onto the observable's outcome list), so set-algebraic
    identities hold exactly despite floating-point spectra.
    """

    def __init__(self, observable: GeneralizedObservable, sigma: Iterable[float]):
        self.observable = observable
        self.sigma: frozenset[float] = frozenset(observable.snap(v) for v in sigma)

    @property
    def contains_a0(self) -> bool:
        return self.observable.a0 in self.sigma

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhysicalProperty):
            return NotImplemented
        return (
            self.observable.name == other.observable.name
            and self.sigma == other.sigma
        )

    def __hash__(self) -> int:
        return hash((self.observable.name, self.sigma))

    def __repr__(self) -> str:
        vals = sorted(self.sigma)
        return f"PhysicalProperty({self.observable.name!r}, sigma={vals})"


def complement(f: PhysicalProperty) -> PhysicalProperty:
    """Complementary property: same observable, complementary outcome set."""
    remaining = set(f.observable.outcomes) - f.sigma
    return PhysicalProperty(f.observable, remaining)


def g_map(f: PhysicalProperty) -> tuple[Observable, frozenset[float]]:
    """Map a property without the no-registration outcome to its quantum pair.

    This realizes the bijection between detection-free physical properties
    and ordinary quantum properties of the underlying observable.
    """
    if f.contains_a0:
        raise ContainsNoRegistration(
            "property includes the no-registration outcome; no quantum counterpart"
        )
    return f.observable.base, f.sigma


def projector_for(f: PhysicalProperty) -> Projector:
    """Spectral projector representing a detection-free property."""
    if f.contains_a0:
        raise ContainsNoRegistration(
            "no projector exists for properties containing the no-registration outcome"
        )
    return Projector(f.observable.base.projector_onto(f.sigma))


class ObservableRegistry:
    """Name-keyed registry of generalized observables.

    Keeping observables in a registry makes name references in JSON configs
    resolvable and lets the quantum-property correspondence be checked per
    name.
    """

    def __init__(self):
        self._by_name: dict[str, GeneralizedObservable] = {}

    def add(self, obs: GeneralizedObservable) -> GeneralizedObservable:
        if obs.name in self._by_name:
            raise ValueError(f"observable {obs.name!r} already registered")
        self._by_name[obs.name] = obs
        return obs

    def get(self, name: str) -> GeneralizedObservable:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown observable {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._by_name)


# --- JSON wire format -------------------------------------------------------

def observable_to_json(obs: GeneralizedObservable) -> dict:
    return {
        "name": obs.name,
        "matrix": matrix_to_json(obs.base.matrix),
        "a0": obs.a0,
    }


def observable_from_json(data: dict) -> GeneralizedObservable:
    base = Observable(data["name"], matrix_from_json(data["matrix"]))
    return make_generalized(base, data.get("a0"))


def property_to_json(f: PhysicalProperty) -> dict:
    return {"observable": f.observable.name, "sigma": sorted(f.sigma)}


def property_from_json(data: dict, registry: ObservableRegistry) -> PhysicalProperty:
    return PhysicalProperty(registry.get(data["observable"]), data["sigma"])
