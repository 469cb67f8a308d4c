"""Shared helpers and fixtures for the test suite."""

import numpy as np
import pytest

from esrsim.hilbert import DensityOperator, StateVector
from esrsim.observables import Observable, make_generalized
from esrsim.probability import PureState

SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)

KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)
PLUS = (KET0 + KET1) / np.sqrt(2.0)
MINUS = (KET0 - KET1) / np.sqrt(2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_hermitian(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2.0


def random_state_vector(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(v / np.linalg.norm(v))


def random_density(rng, dim, rank=None):
    rank = rank or dim
    a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = a @ a.conj().T
    return DensityOperator(m / np.trace(m))


def sigma_z_observable(a0=0.0, name="sigma_z"):
    return make_generalized(Observable(name, SIGMA_Z), a0)


def sigma_x_observable(a0=0.0, name="sigma_x"):
    return make_generalized(Observable(name, SIGMA_X), a0)


def plus_state(label=None):
    return PureState(StateVector(PLUS), label=label)


def ket0_state(label=None):
    return PureState(StateVector(KET0), label=label)


def ket1_state(label=None):
    return PureState(StateVector(KET1), label=label)
