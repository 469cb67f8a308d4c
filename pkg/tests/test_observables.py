"""Tests for generalized observables and physical properties."""

import numpy as np
import pytest

from conftest import KET0, SIGMA_Z, sigma_z_observable
from esrsim.errors import ContainsNoRegistration, OutcomeCollision
from esrsim.observables import (
    Observable,
    ObservableRegistry,
    PhysicalProperty,
    complement,
    g_map,
    make_generalized,
    observable_from_json,
    observable_to_json,
    projector_for,
    property_from_json,
    property_to_json,
)


@pytest.fixture
def szg():
    return sigma_z_observable(a0=0.0)


@pytest.fixture
def three_level():
    return make_generalized(Observable("levels", np.diag([1.0, 2.0, 3.0])), 0.0)


class TestMakeGeneralized:
    def test_outcome_set(self, szg):
        assert szg.outcomes == (0.0, -1.0, 1.0)

    def test_collision_raises(self):
        with pytest.raises(OutcomeCollision):
            make_generalized(Observable("sz", SIGMA_Z), 1.0)

    def test_three_level(self, three_level):
        assert three_level.outcomes == (0.0, 1.0, 2.0, 3.0)

    def test_default_below_spectrum(self):
        obs = make_generalized(Observable("sz", SIGMA_Z))
        assert obs.a0 == -2.0

    def test_snap_rejects_foreign_value(self, szg):
        with pytest.raises(ValueError):
            szg.snap(0.5)


class TestComplement:
    def test_singleton(self, szg):
        f = PhysicalProperty(szg, {1.0})
        assert complement(f).sigma == frozenset({0.0, -1.0})

    def test_empty_set(self, szg):
        f = PhysicalProperty(szg, set())
        assert complement(f).sigma == frozenset(szg.outcomes)

    def test_a0_singleton(self, szg):
        f = PhysicalProperty(szg, {0.0})
        assert complement(f).sigma == frozenset({-1.0, 1.0})

    def test_involution(self, szg):
        f = PhysicalProperty(szg, {1.0, 0.0})
        assert complement(complement(f)) == f

    def test_partition(self, szg):
        f = PhysicalProperty(szg, {-1.0})
        fc = complement(f)
        assert f.sigma | fc.sigma == frozenset(szg.outcomes)
        assert not f.sigma & fc.sigma
        assert f.contains_a0 != fc.contains_a0 or not f.sigma


class TestGMap:
    def test_projects_the_pair(self, szg):
        base, sigma = g_map(PhysicalProperty(szg, {1.0}))
        assert base is szg.base
        assert sigma == frozenset({1.0})

    def test_full_spectrum(self, szg):
        _, sigma = g_map(PhysicalProperty(szg, {-1.0, 1.0}))
        assert sigma == frozenset({-1.0, 1.0})

    def test_guards_a0(self, szg):
        with pytest.raises(ContainsNoRegistration):
            g_map(PhysicalProperty(szg, {0.0, 1.0}))


class TestProjectorFor:
    def test_single_eigenspace(self, szg):
        p = projector_for(PhysicalProperty(szg, {1.0}))
        np.testing.assert_allclose(p.matrix, np.outer(KET0, KET0), atol=1e-12)

    def test_full_spectrum_is_identity(self, szg):
        p = projector_for(PhysicalProperty(szg, {-1.0, 1.0}))
        np.testing.assert_allclose(p.matrix, np.eye(2), atol=1e-12)

    def test_sum_of_spectral_projectors(self, three_level):
        # independent oracle: sum the explicit rank-1 projectors by hand
        p = projector_for(PhysicalProperty(three_level, {1.0, 3.0}))
        np.testing.assert_allclose(p.matrix, np.diag([1.0, 0.0, 1.0]), atol=1e-12)

    def test_guards_a0(self, szg):
        with pytest.raises(ContainsNoRegistration):
            projector_for(PhysicalProperty(szg, {0.0}))

    def test_commutes_with_observable(self, three_level):
        f = PhysicalProperty(three_level, {2.0, 3.0})
        p = projector_for(f).matrix
        a = three_level.base.matrix
        np.testing.assert_allclose(p @ a, a @ p, atol=1e-12)

    def test_complement_projectors_resolve_identity(self, three_level):
        f = PhysicalProperty(three_level, {1.0})
        fc_without_a0 = PhysicalProperty(
            three_level, complement(f).sigma - {three_level.a0}
        )
        total = projector_for(f).matrix + projector_for(fc_without_a0).matrix
        np.testing.assert_allclose(total, np.eye(3), atol=1e-12)


class TestRegistryAndJson:
    def test_registry_round_trip(self, szg):
        reg = ObservableRegistry()
        reg.add(szg)
        assert reg.get("sigma_z") is szg
        assert "sigma_z" in reg
        with pytest.raises(ValueError):
            reg.add(szg)
        with pytest.raises(KeyError):
            reg.get("missing")

    def test_observable_json_round_trip(self, szg):
        rebuilt = observable_from_json(observable_to_json(szg))
        assert rebuilt.name == szg.name
        assert rebuilt.a0 == szg.a0
        np.testing.assert_allclose(rebuilt.base.matrix, szg.base.matrix)

    def test_property_json_round_trip(self, szg):
        reg = ObservableRegistry()
        reg.add(szg)
        f = PhysicalProperty(szg, {1.0, 0.0})
        assert property_from_json(property_to_json(f), reg) == f
