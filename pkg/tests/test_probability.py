"""Tests for the overall / detection / conditional probability algebra."""

import numpy as np
import pytest

from conftest import (
    KET0,
    PLUS,
    ket0_state,
    ket1_state,
    plus_state,
    random_hermitian,
    random_state_vector,
    sigma_z_observable,
)
from esrsim.errors import (
    ComponentUndetectable,
    ContainsNoRegistration,
    DetectionOutOfRange,
    UndefinedRatio,
)
from esrsim.hilbert import DensityOperator
from esrsim.observables import (
    Observable,
    PhysicalProperty,
    complement,
    make_generalized,
    projector_for,
)
from esrsim.probability import (
    ConstantDetection,
    ImproperMixture,
    PerOutcomeDetection,
    PerStateOutcomeDetection,
    ProperMixture,
    PureState,
    conditional_prob,
    detection_from_json,
    detection_prob,
    effect_operator,
    overall_prob,
    proper_mixture_density,
    proper_mixture_probs,
    state_from_json,
)

P_PLUS = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)   # sigma_z eigenvalue +1
P_MINUS = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)  # sigma_z eigenvalue -1


@pytest.fixture
def szg():
    return sigma_z_observable(a0=0.0)


def _random_detection(rng, obs):
    table = {value: rng.uniform(0.05, 1.0) for value in obs.base.eigenvalues}
    return PerOutcomeDetection(table)


class TestConditionalProb:
    def test_plus_state_symmetry(self, szg):
        assert conditional_prob(plus_state(), PhysicalProperty(szg, {1.0})) == pytest.approx(0.5)

    def test_eigenstate(self, szg):
        assert conditional_prob(ket0_state(), PhysicalProperty(szg, {1.0})) == pytest.approx(1.0)

    def test_improper_full_spectrum(self, szg):
        mix = ImproperMixture(DensityOperator(np.eye(2) / 2))
        assert conditional_prob(mix, PhysicalProperty(szg, {-1.0, 1.0})) == pytest.approx(1.0)

    def test_rejects_a0(self, szg):
        with pytest.raises(ContainsNoRegistration):
            conditional_prob(plus_state(), PhysicalProperty(szg, {0.0, 1.0}))

    def test_additive_over_disjoint_sigma(self, szg):
        s = plus_state()
        p_both = conditional_prob(s, PhysicalProperty(szg, {-1.0, 1.0}))
        p_sum = (conditional_prob(s, PhysicalProperty(szg, {-1.0}))
                 + conditional_prob(s, PhysicalProperty(szg, {1.0})))
        assert p_both == pytest.approx(p_sum, abs=1e-12)


class TestEffectOperator:
    def test_constant_model_scales_projector(self, szg):
        t = effect_operator(plus_state(), szg, {1.0}, ConstantDetection(0.8))
        np.testing.assert_allclose(t, 0.8 * P_PLUS, atol=1e-12)

    def test_per_outcome_weighted_sum(self, szg):
        d = PerOutcomeDetection({1.0: 0.9, -1.0: 0.5})
        t = effect_operator(plus_state(), szg, {-1.0, 1.0}, d)
        np.testing.assert_allclose(t, 0.9 * P_PLUS + 0.5 * P_MINUS, atol=1e-12)

    def test_a0_branch_is_identity_complement(self, szg):
        # substitution oracle: I - 0.9 P+ - 0.5 P- = 0.1 P+ + 0.5 P-
        d = PerOutcomeDetection({1.0: 0.9, -1.0: 0.5})
        t = effect_operator(plus_state(), szg, {0.0}, d)
        np.testing.assert_allclose(t, 0.1 * P_PLUS + 0.5 * P_MINUS, atol=1e-12)

    def test_rejects_out_of_range(self, szg):
        d = PerOutcomeDetection({1.0: 0.9, -1.0: 0.5})
        bad = PerStateOutcomeDetection(lambda s, o, v: 1.3)
        with pytest.raises(DetectionOutOfRange):
            effect_operator(plus_state(), szg, {1.0}, bad)

    def test_pov_measure_additivity(self, rng, szg):
        d = _random_detection(rng, szg)
        s = plus_state()
        t_all = sum(
            effect_operator(s, szg, {v}, d) for v in szg.outcomes
        )
        np.testing.assert_allclose(t_all, np.eye(2), atol=1e-12)

    def test_effect_eigenvalues_within_unit_interval(self, rng, szg):
        for _ in range(50):
            d = _random_detection(rng, szg)
            sigma = {v for v in szg.outcomes if rng.random() < 0.5}
            t = effect_operator(plus_state(), szg, sigma, d)
            evals = np.linalg.eigvalsh(t)
            assert evals.min() >= -1e-12 and evals.max() <= 1.0 + 1e-12


class TestOverallProb:
    def test_plus_state_yes(self, szg):
        assert overall_prob(plus_state(), PhysicalProperty(szg, {1.0}),
                            ConstantDetection(0.8)) == pytest.approx(0.4)

    def test_plus_state_no_registration(self, szg):
        assert overall_prob(plus_state(), PhysicalProperty(szg, {0.0}),
                            ConstantDetection(0.8)) == pytest.approx(0.2)

    def test_complement_identity_value(self, szg):
        # 1 - p_t({-1}) = 1 - 0.4
        got = overall_prob(plus_state(), PhysicalProperty(szg, {0.0, 1.0}),
                           ConstantDetection(0.8))
        assert got == pytest.approx(0.6, abs=1e-12)


class TestDetectionProb:
    def test_constant_model(self, szg):
        assert detection_prob(plus_state(), PhysicalProperty(szg, {1.0}),
                              ConstantDetection(0.8)) == pytest.approx(0.8)

    def test_single_outcome_table(self, szg):
        d = PerOutcomeDetection({1.0: 0.9, -1.0: 0.5})
        assert detection_prob(plus_state(), PhysicalProperty(szg, {1.0}),
                              d) == pytest.approx(0.9)

    def test_weighted_average_over_sigma(self, szg):
        # (0.45 + 0.25) / 1
        d = PerOutcomeDetection({1.0: 0.9, -1.0: 0.5})
        assert detection_prob(plus_state(), PhysicalProperty(szg, {-1.0, 1.0}),
                              d) == pytest.approx(0.7, abs=1e-12)

    def test_zero_conditional_raises(self, szg):
        with pytest.raises(UndefinedRatio):
            detection_prob(ket1_state(), PhysicalProperty(szg, {1.0}),
                           ConstantDetection(0.8))


class TestPerStateOutcome:
    def test_lookup_by_label(self, szg):
        d = PerStateOutcomeDetection({
            ("s1", "sigma_z", 1.0): 0.9,
            ("s1", "sigma_z", -1.0): 0.5,
        })
        s = plus_state(label="s1")
        assert detection_prob(s, PhysicalProperty(szg, {1.0}), d) == pytest.approx(0.9)

    def test_missing_label_raises(self, szg):
        d = PerStateOutcomeDetection({("s1", "sigma_z", 1.0): 0.9})
        with pytest.raises(KeyError):
            overall_prob(plus_state(), PhysicalProperty(szg, {1.0}), d)

    def test_default_fallback(self, szg):
        d = PerStateOutcomeDetection({}, default=0.7)
        s = plus_state(label="anything")
        assert detection_prob(s, PhysicalProperty(szg, {1.0}), d) == pytest.approx(0.7)


class TestProperMixture:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ProperMixture([(0.3, ket0_state()), (0.3, plus_state())])

    def test_constant_detection_keeps_weights(self, szg):
        m = ProperMixture([(0.3, ket0_state()), (0.7, plus_state())])
        rho = proper_mixture_density(m, PhysicalProperty(szg, {1.0}), ConstantDetection(0.8))
        expected = 0.3 * ket0_state().rho + 0.7 * plus_state().rho
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-12)

    def test_detection_dependent_reweighting(self, szg):
        # hand substitution: weights 0.45/0.7 and 0.25/0.7
        d = PerStateOutcomeDetection({
            ("zero", "sigma_z", 1.0): 0.9, ("zero", "sigma_z", -1.0): 0.9,
            ("plus", "sigma_z", 1.0): 0.5, ("plus", "sigma_z", -1.0): 0.5,
        })
        m = ProperMixture([(0.5, ket0_state("zero")), (0.5, plus_state("plus"))])
        rho = proper_mixture_density(m, PhysicalProperty(szg, {1.0}), d)
        w0, wp = 0.45 / 0.7, 0.25 / 0.7
        expected = w0 * ket0_state().rho + wp * plus_state().rho
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-12)

    def test_single_component_reduces_to_component(self, szg):
        m = ProperMixture([(1.0, plus_state())])
        rho = proper_mixture_density(m, PhysicalProperty(szg, {1.0}), ConstantDetection(0.6))
        np.testing.assert_allclose(rho.matrix, plus_state().rho, atol=1e-12)

    def test_undetectable_component_raises(self, szg):
        m = ProperMixture([(0.5, ket0_state()), (0.5, ket1_state())])
        with pytest.raises(ComponentUndetectable):
            proper_mixture_density(m, PhysicalProperty(szg, {1.0}), ConstantDetection(0.8))

    def test_probs_convex_combination(self, szg):
        m = ProperMixture([(0.3, ket0_state()), (0.7, plus_state())])
        p, p_d, p_t = proper_mixture_probs(m, PhysicalProperty(szg, {1.0}),
                                           ConstantDetection(0.8))
        assert p == pytest.approx(0.65, abs=1e-12)
        assert p_d == pytest.approx(0.8, abs=1e-12)
        assert p_t == pytest.approx(0.52, abs=1e-12)

    def test_probs_two_detection_rows(self, szg):
        d = PerStateOutcomeDetection({
            ("zero", "sigma_z", 1.0): 0.9, ("zero", "sigma_z", -1.0): 0.9,
            ("plus", "sigma_z", 1.0): 0.5, ("plus", "sigma_z", -1.0): 0.5,
        })
        m = ProperMixture([(0.5, ket0_state("zero")), (0.5, plus_state("plus"))])
        p, p_d, p_t = proper_mixture_probs(m, PhysicalProperty(szg, {1.0}), d)
        # hand substitution: rho_M(F) weights (0.45, 0.25)/0.7
        assert p == pytest.approx((0.45 + 0.25 * 0.5) / 0.7, abs=1e-12)
        assert p_d == pytest.approx(0.7, abs=1e-12)
        assert p_t == pytest.approx(p_d * p, abs=1e-12)

    def test_single_eigenstate_component(self, szg):
        m = ProperMixture([(1.0, ket0_state())])
        p, p_d, p_t = proper_mixture_probs(m, PhysicalProperty(szg, {1.0}),
                                           ConstantDetection(0.61))
        assert (p, p_d, p_t) == pytest.approx((1.0, 0.61, 0.61), abs=1e-12)


class TestAlgebraInvariants:
    """Randomized checks of the product, complement and measure identities."""

    def _random_case(self, rng):
        dim = int(rng.integers(2, 9))
        base = Observable(f"obs{rng.integers(1e9)}", random_hermitian(rng, dim))
        obs = make_generalized(base, a0=float(min(base.eigenvalues) - 1.5))
        state = (PureState(random_state_vector(rng, dim))
                 if rng.random() < 0.5 else
                 ImproperMixture(_random_density(rng, dim)))
        d = PerOutcomeDetection(
            {v: rng.uniform(0.05, 1.0) for v in base.eigenvalues}
        )
        return obs, state, d

    def test_product_identity_random(self, rng):
        cases = 0
        while cases < 1000:
            obs, state, d = self._random_case(rng)
            values = list(obs.base.eigenvalues)
            sigma = {v for v in values if rng.random() < 0.5} or {values[0]}
            f = PhysicalProperty(obs, sigma)
            cond = conditional_prob(state, f)
            if cond <= 1e-9:
                continue
            cases += 1
            assert overall_prob(state, f, d) == pytest.approx(
                detection_prob(state, f, d) * cond, abs=1e-12
            )

    def test_complement_identity_random(self, rng):
        for _ in range(1000):
            obs, state, d = self._random_case(rng)
            values = list(obs.base.eigenvalues)
            sigma = {v for v in values if rng.random() < 0.5} | {obs.a0}
            f = PhysicalProperty(obs, sigma)
            total = overall_prob(state, f, d) + overall_prob(state, complement(f), d)
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_singleton_measure_sums_to_one(self, rng):
        for _ in range(200):
            obs, state, d = self._random_case(rng)
            total = sum(
                overall_prob(state, PhysicalProperty(obs, {v}), d)
                for v in obs.outcomes
            )
            assert total == pytest.approx(1.0, abs=1e-10)

    def test_additivity_over_disjoint_sigma(self, rng):
        for _ in range(200):
            obs, state, d = self._random_case(rng)
            values = list(obs.outcomes)
            rng.shuffle(values)
            cut = len(values) // 2
            s1, s2 = set(values[:cut]), set(values[cut:])
            if not s1 or not s2:
                continue
            lhs = overall_prob(state, PhysicalProperty(obs, s1 | s2), d)
            rhs = (overall_prob(state, PhysicalProperty(obs, s1), d)
                   + overall_prob(state, PhysicalProperty(obs, s2), d))
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_born_recovery_at_full_detection(self, rng):
        eta_one = ConstantDetection(1.0)
        for _ in range(300):
            obs, state, _ = self._random_case(rng)
            values = list(obs.base.eigenvalues)
            sigma = {v for v in values if rng.random() < 0.5} or {values[0]}
            f = PhysicalProperty(obs, sigma)
            born = float(np.real(np.trace(state.rho @ projector_for(f).matrix)))
            assert overall_prob(state, f, eta_one) == pytest.approx(born, abs=1e-12)
            assert overall_prob(state, PhysicalProperty(obs, {obs.a0}),
                                eta_one) == pytest.approx(0.0, abs=1e-12)


class TestJsonLoaders:
    def test_constant(self):
        d = detection_from_json({"kind": "constant", "eta": 0.8})
        assert isinstance(d, ConstantDetection) and d.eta == 0.8

    def test_per_outcome(self):
        d = detection_from_json({"kind": "per_outcome", "table": {"1": 0.9, "-1": 0.5}})
        assert isinstance(d, PerOutcomeDetection)
        assert d.table == {1.0: 0.9, -1.0: 0.5}

    def test_per_state_outcome(self):
        d = detection_from_json({
            "kind": "per_state_outcome",
            "entries": [{"state": "s", "observable": "o", "outcome": 1, "p": 0.25}],
        })
        assert isinstance(d, PerStateOutcomeDetection)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            detection_from_json({"kind": "nope"})

    def test_state_json(self):
        pure = state_from_json({"kind": "pure", "vector": [[1, 0], [0, 0]], "label": "z"})
        assert isinstance(pure, PureState) and pure.label == "z"
        improper = state_from_json({
            "kind": "improper",
            "matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]],
        })
        assert isinstance(improper, ImproperMixture)
        proper = state_from_json({
            "kind": "proper",
            "components": [
                {"weight": 0.5, "state": {"kind": "pure", "vector": [[1, 0], [0, 0]]}},
                {"weight": 0.5, "state": {"kind": "pure", "vector": [[0, 0], [1, 0]]}},
            ],
        })
        assert isinstance(proper, ProperMixture) and len(proper) == 2


def _random_density(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = a @ a.conj().T
    return DensityOperator(m / np.trace(m))
