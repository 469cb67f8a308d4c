"""Bipartite singlet experiments and detection-efficiency thresholds.

Two spin-1/2 particles in the singlet state are measured along analyzer
angles in the x-z plane. The detected-subensemble correlator is the Born
value; over the all-produced ensemble each undetected wing contributes zero
to the product while the denominator still counts every pair, which scales
the correlator by the product of the wing efficiencies. Scanning the
symmetric efficiency for the largest value at which the maximal quantum
violation stays inside the classical bound gives the critical efficiencies
2**(-1/4) for the CHSH inequality and sqrt(2/3) for the original one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .errors import EtaOutOfRange
from .hilbert import StateVector, spectral_decompose, tensor
from .observables import GeneralizedObservable, Observable, PhysicalProperty, make_generalized
from .probability import PureState, conditional_prob

_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class BipartiteSettings:
    """Analyzer angles (radians) of the two wings: (a, a') and (b, b')."""

    a: float
    a_prime: float
    b: float
    b_prime: float

    def pairs(self) -> tuple[tuple[str, float, float], ...]:
        return (
            ("ab", self.a, self.b),
            ("ab'", self.a, self.b_prime),
            ("a'b", self.a_prime, self.b),
            ("a'b'", self.a_prime, self.b_prime),
        )


# Settings achieving |S| = 2 sqrt 2 under the sign convention used by
# chsh_value, and angles achieving the maximal value 1.5 of the original
# inequality functional.
TSIRELSON_SETTINGS = BipartiteSettings(0.0, math.pi / 2, 5 * math.pi / 4, 3 * math.pi / 4)
BELL_MAX_ANGLES = (0.0, math.pi / 3, 2 * math.pi / 3)

CHSH_CLASSICAL_BOUND = 2.0
BELL_CLASSICAL_BOUND = 1.0


def spin_observable(theta: float) -> np.ndarray:
    """Spin component along the angle ``theta`` in the x-z plane."""
    return math.cos(theta) * _SIGMA_Z + math.sin(theta) * _SIGMA_X


def singlet_state() -> StateVector:
    """The two-qubit singlet (|01> - |10>) / sqrt 2."""
    return StateVector(np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0))


def _product_observable(theta_a: float, theta_b: float) -> GeneralizedObservable:
    """Joint +/-1-valued product observable of the two wings.

    The no-registration outcome is placed at 0, the pointer's initial
    position, which never collides with the +/-1 spectrum.
    """
    matrix = tensor(spin_observable(theta_a), spin_observable(theta_b))
    base = Observable(f"spin_product({theta_a:.12g},{theta_b:.12g})", matrix)
    return make_generalized(base, a0=0.0)


def conditional_correlator(theta_a: float, theta_b: float) -> float:
    """Detected-subensemble correlator of the singlet, computed by Born rule.

    Evaluated as the probability difference of the +1 and -1 outcomes of the
    joint product observable; equals -cos(theta_a - theta_b).
    """
    obs = _product_observable(theta_a, theta_b)
    state = PureState(singlet_state())
    p_plus = conditional_prob(state, PhysicalProperty(obs, {1.0}))
    p_minus = conditional_prob(state, PhysicalProperty(obs, {-1.0}))
    return p_plus - p_minus


def _check_eta(eta: float, name: str) -> float:
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise EtaOutOfRange(f"{name}={eta} outside [0, 1]")
    return eta


def overall_correlator(theta_a: float, theta_b: float,
                       eta_a: float, eta_b: float) -> float:
    """All-produced-ensemble correlator with independent wing detections.

    An undetected wing contributes 0 to the outcome product, while the
    denominator counts every produced pair, so the detected-subensemble
    correlator is scaled by eta_a * eta_b.
    """
    _check_eta(eta_a, "eta_a")
    _check_eta(eta_b, "eta_b")
    return eta_a * eta_b * conditional_correlator(theta_a, theta_b)


def chsh_value(settings: BipartiteSettings,
               correlator: Callable[[float, float], float]) -> float:
    """CHSH combination E(a,b) + E(a,b') + E(a',b) - E(a',b')."""
    return (
        correlator(settings.a, settings.b)
        + correlator(settings.a, settings.b_prime)
        + correlator(settings.a_prime, settings.b)
        - correlator(settings.a_prime, settings.b_prime)
    )


def bell_ohs_value(a: float, b: float, c: float,
                   correlator: Callable[[float, float], float]) -> float:
    """Original three-angle inequality functional |E(a,b) - E(a,c)| - E(b,c).

    Classically bounded by 1; the singlet conditional correlator reaches 1.5.
    """
    return abs(correlator(a, b) - correlator(a, c)) - correlator(b, c)


@lru_cache(maxsize=None)
def _correlator_table(n: int = 360) -> np.ndarray:
    """Conditional correlator sampled at every multiple of 2 pi / n.

    The correlator depends on the angle difference only, so on an n-point
    grid every value any settings combination needs appears in this table.
    """
    step = 2.0 * math.pi / n
    return np.array([conditional_correlator(0.0, k * step) for k in range(n)])


def max_chsh_violation(grid: int = 360) -> float:
    """Largest |CHSH value| of the conditional correlator over an angle grid.

    The first wing angle is pinned to zero (only angle differences matter);
    the two second-wing angles decouple, so the maximization is separable
    and costs O(grid^2).
    """
    table = _correlator_table(grid)
    deg = np.arange(grid)
    e0 = table[(-deg) % grid]                      # E(0, x)
    ap = table[(deg[:, None] - deg[None, :]) % grid]  # E(a', x)
    upper = (e0[None, :] + ap).max(axis=1) + (e0[None, :] - ap).max(axis=1)
    lower = (e0[None, :] + ap).min(axis=1) + (e0[None, :] - ap).min(axis=1)
    return float(max(upper.max(), -lower.min()))


def max_bell_violation(grid: int = 360) -> float:
    """Largest original-inequality value of the conditional correlator on a grid."""
    table = _correlator_table(grid)
    deg = np.arange(grid)
    e0 = table[(-deg) % grid]
    ebc = table[(deg[:, None] - deg[None, :]) % grid]
    values = np.abs(e0[:, None] - e0[None, :]) - ebc
    return float(values.max())


def critical_efficiency(kind: str, search_tol: float = 1e-5) -> float:
    """Largest symmetric efficiency keeping the overall statistics classical.

    With symmetric wing efficiency eta the maximal overall violation is
    eta^2 times the maximal conditional violation; the function bisects for
    the eta at which that product meets the classical bound (2 for "chsh",
    1 for "bell_original").
    """
    if search_tol <= 0:
        raise ValueError("search_tol must be positive")
    kind = kind.lower()
    if kind == "chsh":
        bound, vmax = CHSH_CLASSICAL_BOUND, max_chsh_violation()
    elif kind in ("bell", "bell_original"):
        bound, vmax = BELL_CLASSICAL_BOUND, max_bell_violation()
    else:
        raise ValueError(f"unknown inequality kind {kind!r}")
    if vmax <= bound:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > search_tol:
        mid = 0.5 * (lo + hi)
        if mid * mid * vmax <= bound:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class CorrelationRecord:
    """Tallies of one measured settings pair over a produced ensemble.

    ``tallies`` counts recorded per-wing outcomes, with 0 standing for the
    no-registration (pointer never moved) case.
    """

    n_produced: int
    n_both_detected: int
    sum_products_detected: int
    tallies: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_both_detected > self.n_produced:
            raise ValueError("detected count exceeds produced count")
        if abs(self.sum_products_detected) > self.n_both_detected:
            raise ValueError("product sum exceeds the detected count")

    @property
    def detected_correlator(self) -> float:
        if self.n_both_detected == 0:
            return 0.0
        return self.sum_products_detected / self.n_both_detected

    @property
    def overall_correlator(self) -> float:
        return self.sum_products_detected / self.n_produced


def _joint_outcome_probs(theta_a: float, theta_b: float) -> list[tuple[int, int, float]]:
    """Born probabilities of the four joint +/-1 outcomes on the singlet."""
    rho = singlet_state().density().matrix
    spectrum_a = spectral_decompose(spin_observable(theta_a))
    spectrum_b = spectral_decompose(spin_observable(theta_b))
    probs = []
    for val_a, proj_a in spectrum_a:
        for val_b, proj_b in spectrum_b:
            joint = tensor(proj_a, proj_b)
            p = float(np.real(np.trace(rho @ joint)))
            probs.append((int(round(val_a)), int(round(val_b)), max(p, 0.0)))
    return probs


def simulate_bell_run(settings: BipartiteSettings, eta_a: float, eta_b: float,
                      n_pairs: int, seed: int) -> dict[str, CorrelationRecord]:
    """Monte Carlo run of all four settings pairs.

    Each produced pair draws a joint Born outcome, then each wing is
    detected independently with its efficiency. Draws are vectorized from a
    single generator seeded with ``seed`` and the settings pairs are
    processed in a fixed order, so results are deterministic for fixed
    inputs.
    """
    _check_eta(eta_a, "eta_a")
    _check_eta(eta_b, "eta_b")
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    rng = np.random.default_rng(seed)
    records: dict[str, CorrelationRecord] = {}
    for name, theta_a, theta_b in settings.pairs():
        outcomes = _joint_outcome_probs(theta_a, theta_b)
        p = np.array([x[2] for x in outcomes])
        p = p / p.sum()
        drawn = rng.choice(len(outcomes), size=n_pairs, p=p)
        det_a = rng.random(n_pairs) < eta_a
        det_b = rng.random(n_pairs) < eta_b
        val_a = np.array([x[0] for x in outcomes])[drawn]
        val_b = np.array([x[1] for x in outcomes])[drawn]
        both = det_a & det_b
        rec_a = np.where(det_a, val_a, 0)
        rec_b = np.where(det_b, val_b, 0)
        tallies: dict[tuple[int, int], int] = {}
        labels, counts = np.unique(np.stack([rec_a, rec_b], axis=1), axis=0,
                                   return_counts=True)
        for (la, lb), count in zip(labels, counts):
            tallies[(int(la), int(lb))] = int(count)
        records[name] = CorrelationRecord(
            n_produced=n_pairs,
            n_both_detected=int(both.sum()),
            sum_products_detected=int((val_a[both] * val_b[both]).sum()),
            tallies=tallies,
        )
    return records


def chsh_from_records(records: Mapping[str, CorrelationRecord],
                      which: str = "detected") -> float:
    """CHSH estimate from simulation records ("detected" or "overall")."""
    if which == "detected":
        e = {name: rec.detected_correlator for name, rec in records.items()}
    elif which == "overall":
        e = {name: rec.overall_correlator for name, rec in records.items()}
    else:
        raise ValueError(f"which must be 'detected' or 'overall', got {which!r}")
    return e["ab"] + e["ab'"] + e["a'b"] - e["a'b'"]
