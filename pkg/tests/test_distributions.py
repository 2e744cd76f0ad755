import math

import numpy as np
import pytest

from collider import (
    AbsoluteContinuityError,
    DiscreteDistribution,
    collision_probability,
    frequency_moment,
    kl_divergence,
    make_rng,
    new_exponential,
    new_power_law,
    new_two_point_pair,
    new_uniform,
    parse_distribution_spec,
    random_distribution,
    sample,
    tv_distance,
)


class TestConstructors:
    def test_uniform_entries(self):
        assert np.allclose(new_uniform(4).probs, 0.25)
        assert new_uniform(1).probs.tolist() == [1.0]

    def test_uniform_collision_probability(self):
        assert collision_probability(new_uniform(1000)) == pytest.approx(0.001, abs=1e-15)

    def test_power_law_exact_rationals(self):
        d = new_power_law(3)
        assert np.allclose(d.probs, [6 / 11, 3 / 11, 2 / 11], atol=1e-15)
        assert collision_probability(d) == pytest.approx(49 / 121, abs=1e-15)
        assert new_power_law(1).probs.tolist() == [1.0]

    def test_exponential_entries(self):
        d = new_exponential(2)
        z = 1.0 + math.exp(-1.0)
        assert d.probs[0] == pytest.approx(1.0 / z, abs=1e-15)
        assert d.probs[1] == pytest.approx(math.exp(-1.0) / z, abs=1e-15)
        expected_c = (1.0 / z) ** 2 + (math.exp(-1.0) / z) ** 2
        assert collision_probability(d) == pytest.approx(expected_c, abs=1e-14)
        assert new_exponential(1).probs.tolist() == [1.0]

    @pytest.mark.parametrize("ctor", [new_uniform, new_power_law, new_exponential])
    def test_zero_support_rejected(self, ctor):
        with pytest.raises(ValueError):
            ctor(0)

    def test_large_support_normalizes(self):
        d = new_power_law(10**6)
        assert abs(math.fsum(d.probs.tolist()) - 1.0) <= 1e-12

    def test_probs_are_immutable(self):
        d = new_uniform(3)
        with pytest.raises(ValueError):
            d.probs[0] = 0.5

    def test_direct_construction_validates(self):
        with pytest.raises(ValueError):
            DiscreteDistribution(np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            DiscreteDistribution(np.array([-0.1, 1.1]))
        with pytest.raises(ValueError):
            DiscreteDistribution(np.array([]))


class TestTwoPointPair:
    def test_k2_half_tau(self):
        pair = new_two_point_pair(2, 0.5)
        assert np.allclose(pair.p0.probs, [0.5, 0.5], atol=1e-15)
        assert np.allclose(pair.p1.probs, [0.25, 0.75], atol=1e-15)
        gap = abs(collision_probability(pair.p0) - collision_probability(pair.p1))
        assert gap == pytest.approx(0.125, abs=1e-15)

    def test_tiny_tau_collapses(self):
        pair = new_two_point_pair(2, 1e-9)
        assert np.allclose(pair.p0.probs, pair.p1.probs, atol=1e-8)

    def test_construction_matches_display(self):
        pair = new_two_point_pair(5, 0.3)
        base = 1.0 / (2 * 4)
        assert np.allclose(pair.p0.probs, [base] * 4 + [0.5], atol=1e-15)
        assert np.allclose(pair.p1.probs, [(1 - 0.3) * base] * 4 + [(1 + 0.3) / 2], atol=1e-15)

    def test_gap_lower_bound_where_valid(self):
        # |C(p0) - C(p1)| >= tau/2 exactly when tau * K >= 2
        for K, tau in [(5, 0.5), (10, 0.21), (40, 0.06)]:
            pair = new_two_point_pair(K, tau)
            gap = abs(collision_probability(pair.p0) - collision_probability(pair.p1))
            assert gap >= tau / 2

    @pytest.mark.parametrize("K,tau", [(1, 0.5), (2, 0.0), (2, 1.0), (2, -0.3)])
    def test_invalid_parameters(self, K, tau):
        with pytest.raises(ValueError):
            new_two_point_pair(K, tau)


class TestSampling:
    def test_point_mass(self):
        d = DiscreteDistribution(np.array([1.0]))
        rng = make_rng(0)
        assert all(sample(d, rng) == 1 for _ in range(20))

    def test_determinism(self):
        d = new_power_law(7)
        a = sample(d, make_rng(123), size=100)
        b = sample(d, make_rng(123), size=100)
        assert np.array_equal(a, b)

    def test_uniform_two_frequency(self):
        d = new_uniform(2)
        draws = sample(d, make_rng(42), size=10**6)
        freq = np.mean(draws == 1)
        assert 0.499 <= freq <= 0.501

    def test_histogram_matches_probs(self):
        d = new_power_law(10)
        n = 10**6
        draws = sample(d, make_rng(7), size=n)
        counts = np.bincount(draws, minlength=11)[1:]
        for p, cnt in zip(d.probs, counts):
            tol = 4 * math.sqrt(p * (1 - p) / n)
            assert abs(cnt / n - p) <= tol

    def test_ids_in_support(self):
        d = new_exponential(5)
        draws = sample(d, make_rng(1), size=1000)
        assert draws.min() >= 1 and draws.max() <= 5


class TestFunctionals:
    def test_frequency_moment_examples(self):
        d = new_uniform(4)
        assert frequency_moment(d, 2) == pytest.approx(0.25, abs=1e-15)
        assert frequency_moment(d, 1) == pytest.approx(1.0, abs=1e-15)
        assert frequency_moment(d, 1.5) == pytest.approx(0.5, abs=1e-15)

    def test_frequency_moment_is_collision_probability_at_two(self):
        d = new_power_law(17)
        assert frequency_moment(d, 2) == pytest.approx(collision_probability(d), abs=1e-16)

    def test_frequency_moment_rejects_bad_order(self):
        with pytest.raises(ValueError):
            frequency_moment(new_uniform(3), 0.0)
        with pytest.raises(ValueError):
            frequency_moment(new_uniform(3), -1.0)

    def test_normalization_moment_for_random_distributions(self):
        rng = make_rng(5)
        for _ in range(50):
            d = random_distribution(int(rng.integers(1, 200)), rng)
            assert frequency_moment(d, 1) == pytest.approx(1.0, abs=1e-12)

    def test_point_mass_collision(self):
        assert collision_probability(DiscreteDistribution(np.array([1.0]))) == 1.0

    def test_tv_examples(self):
        d = new_uniform(4)
        assert tv_distance(d, d) == 0.0
        a = DiscreteDistribution(np.array([1.0, 0.0]))
        b = DiscreteDistribution(np.array([0.0, 1.0]))
        assert tv_distance(a, b) == 1.0
        pair = new_two_point_pair(2, 0.5)
        assert tv_distance(pair.p0, pair.p1) == pytest.approx(0.25, abs=1e-15)

    def test_tv_support_mismatch(self):
        with pytest.raises(ValueError):
            tv_distance(new_uniform(3), new_uniform(4))

    def test_kl_examples(self):
        d = new_power_law(6)
        assert kl_divergence(d, d) == pytest.approx(0.0, abs=1e-15)
        expected = 0.5 * math.log(1.0 / (1.0 - 0.3**2))
        for K in (2, 5, 10):
            pair = new_two_point_pair(K, 0.3)
            assert kl_divergence(pair.p0, pair.p1) == pytest.approx(expected, abs=1e-12)

    def test_kl_pinsker_consistency(self):
        pair = new_two_point_pair(5, 0.3)
        kl = kl_divergence(pair.p0, pair.p1)
        tv = tv_distance(pair.p0, pair.p1)
        assert kl >= 2 * tv * tv

    def test_kl_absolute_continuity(self):
        p = DiscreteDistribution(np.array([0.5, 0.5]))
        q = DiscreteDistribution(np.array([1.0, 0.0]))
        with pytest.raises(AbsoluteContinuityError):
            kl_divergence(p, q)
        # zero mass in p where q has mass is fine (0 ln 0 = 0)
        assert math.isfinite(kl_divergence(q, p))

    def test_collision_tv_and_kl_inequalities(self):
        rng = make_rng(99)
        for _ in range(200):
            k = int(rng.integers(2, 51))
            d1 = random_distribution(k, rng)
            d2 = random_distribution(k, rng)
            gap = abs(collision_probability(d1) - collision_probability(d2))
            assert gap <= 6 * tv_distance(d1, d2)
            assert gap * gap <= 18 * kl_divergence(d1, d2)


class TestSpecStrings:
    def test_roundtrip_forms(self):
        assert parse_distribution_spec("uniform:k=4").k == 4
        assert np.allclose(parse_distribution_spec("powerlaw:k=3").probs, [6 / 11, 3 / 11, 2 / 11])
        assert parse_distribution_spec("exponential:k=2").k == 2
        p0 = parse_distribution_spec("twopoint:k=2,tau=0.5,side=0")
        p1 = parse_distribution_spec("twopoint:k=2,tau=0.5,side=1")
        assert np.allclose(p0.probs, [0.5, 0.5])
        assert np.allclose(p1.probs, [0.25, 0.75])

    @pytest.mark.parametrize(
        "bad",
        [
            "uniform",
            "uniform:k=x",
            "gauss:k=3",
            "twopoint:k=2,tau=0.5,side=2",
            "twopoint:k=2,side=1",
            "uniform:j=3",
        ],
    )
    def test_malformed_specs(self, bad):
        with pytest.raises(ValueError):
            parse_distribution_spec(bad)

    def test_error_names_offending_token(self):
        with pytest.raises(ValueError, match="k="):
            parse_distribution_spec("uniform:q=3")
