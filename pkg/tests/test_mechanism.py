import math

import numpy as np
import pytest

from collider import (
    HashChannel,
    InfeasiblePlanError,
    PrivacyParams,
    collision_probability,
    krappor_indirect_estimate,
    make_rng,
    new_uniform,
    plan_mechanism,
    recommended_n,
    run_mechanism,
)
from collider.batch import plug_in
from collider.distributions import sample
from collider.mechanism import group_statistics, lower_median

PARAMS_LN3 = PrivacyParams(math.log(3.0), 0.04)


class TestPlan:
    def test_unit_log_example(self):
        plan = plan_mechanism(1600, 1.0, math.exp(-1.0), PARAMS_LN3)
        assert (plan.g, plan.a, plan.b) == (160, 8, 20)
        assert plan.m == pytest.approx(10.0)

    def test_b_matches_proof_identity(self):
        # b = g/a = 20/eps_rel^2 exactly at delta = 1/e
        plan = plan_mechanism(1600, 1.0, math.exp(-1.0), PARAMS_LN3)
        assert plan.b == 20

    def test_half_delta_example(self):
        plan = plan_mechanism(10**6, 1.0, 0.5, PARAMS_LN3)
        assert plan.g == math.ceil(160 * math.log(2.0)) == 111
        assert plan.a == math.ceil(8 * math.log(2.0)) == 6

    def test_infeasible_reports_minimum(self):
        with pytest.raises(InfeasiblePlanError, match="160"):
            plan_mechanism(100, 1.0, math.exp(-1.0), PARAMS_LN3)

    def test_a_never_exceeds_g(self):
        for eps in (0.1, 0.5, 1.0):
            for delta in (0.9, 0.5, 0.01):
                plan = plan_mechanism(10**7, eps, delta, PARAMS_LN3)
                assert plan.a <= plan.g

    @pytest.mark.parametrize("eps,delta", [(0.0, 0.5), (1.5, 0.5), (1.0, 0.0), (1.0, 1.0)])
    def test_parameter_validation(self, eps, delta):
        with pytest.raises(ValueError):
            plan_mechanism(10**6, eps, delta, PARAMS_LN3)


class TestRecommendedN:
    def test_tenth_example(self):
        n = recommended_n(0.1, 1.0, math.exp(-1.0), PARAMS_LN3)
        assert n == 1280 * 111 * 10  # 1,420,800

    def test_point_mass_example(self):
        assert recommended_n(1.0, 1.0, math.exp(-1.0), PARAMS_LN3) == 142080

    def test_quadratic_scaling_in_eps(self):
        base = recommended_n(0.1, 1.0, math.exp(-1.0), PARAMS_LN3)
        assert recommended_n(0.1, 0.5, math.exp(-1.0), PARAMS_LN3) == 4 * base


class TestMedian:
    def test_robust_to_outlier(self):
        assert lower_median(np.array([1.0, 2.0, 100.0])) == 2.0

    def test_even_count_takes_lower(self):
        assert lower_median(np.array([1.0, 2.0, 3.0, 100.0])) == 2.0

    def test_permutation_invariant(self):
        rng = make_rng(4)
        values = rng.normal(size=9)
        assert lower_median(values) == lower_median(values[rng.permutation(9)])


class TestRunMechanism:
    def test_shape_and_determinism(self):
        plan = plan_mechanism(1600, 1.0, math.exp(-1.0), PARAMS_LN3)
        d = new_uniform(10)
        results = []
        for _ in range(2):
            rng = make_rng(21)
            channel = HashChannel(seed=bytes(range(16)), params=PARAMS_LN3)
            results.append(run_mechanism(plan, channel, d, rng))
        first, second = results
        assert first.c_hat == second.c_hat
        assert first.users_consumed == second.users_consumed
        assert len(first.per_supergroup_means) == math.ceil(plan.g / plan.b)
        assert first.c_hat == lower_median(first.per_supergroup_means)

    def test_users_consumed_mean(self):
        plan = plan_mechanism(1600, 1.0, math.exp(-1.0), PARAMS_LN3)
        d = new_uniform(10)
        rng = make_rng(22)
        totals = []
        for _ in range(50):
            channel = HashChannel(seed=rng.bytes(16), params=PARAMS_LN3)
            totals.append(run_mechanism(plan, channel, d, rng).users_consumed)
        totals = np.asarray(totals, dtype=float)
        stderr = totals.std(ddof=1) / math.sqrt(totals.size)
        assert abs(totals.mean() - 1600) <= 4 * stderr

    def test_group_statistic_unbiased(self):
        d = new_uniform(10)
        rng = make_rng(23)
        channel = HashChannel(seed=rng.bytes(16), params=PARAMS_LN3)
        c_j, _ = group_statistics(channel, d, 20.0, 3000, rng)
        stderr = c_j.std(ddof=1) / math.sqrt(c_j.size)
        assert abs(c_j.mean() - 0.1) <= 4 * stderr

    def test_empty_group_statistic_value(self):
        # a group with zero users has V = 0, so C_j = -r/m
        d = new_uniform(3)
        rng = make_rng(24)
        channel = HashChannel(seed=rng.bytes(16), params=PARAMS_LN3)
        c_j, total = group_statistics(channel, d, 0.01, 200, rng)
        empty_value = channel.r * (0.0 - 0.01) / (0.01 * 0.01)
        assert np.isclose(c_j, empty_value).sum() >= 190
        assert total <= 30


class TestKrappor:
    def test_debias_constants_at_two_ln_three(self):
        # alpha = 2 ln 3 gives flip 1/4, a = 2, b = 1/2: with no flips the
        # debiased entries are 2 p_hat - 1/2
        alpha = 2 * math.log(3.0)
        half = math.exp(alpha / 2.0)
        assert 1.0 / (half + 1.0) == pytest.approx(0.25)
        assert (half + 1.0) / (half - 1.0) == pytest.approx(2.0)
        assert 1.0 / (half - 1.0) == pytest.approx(0.5)

    def test_huge_alpha_degenerates_to_plug_in(self):
        d = new_uniform(6)
        estimate = krappor_indirect_estimate(d, 500, 60.0, make_rng(31))
        draws = sample(d, make_rng(31), size=500)
        assert estimate == pytest.approx(plug_in(draws), abs=1e-9)

    def test_error_grows_with_support(self):
        # the indirect route degrades with k at fixed n; the hashing
        # mechanism's guarantee does not involve k at all
        errors = {}
        for k in (50, 800):
            d = new_uniform(k)
            errs = [
                abs(krappor_indirect_estimate(d, 5000, 0.5, make_rng(32, k, t)) - 1.0 / k)
                for t in range(10)
            ]
            errors[k] = float(np.mean(errs))
        assert errors[800] > 5 * errors[50]

    def test_validation(self):
        d = new_uniform(3)
        with pytest.raises(ValueError):
            krappor_indirect_estimate(d, 0, 1.0, make_rng(0))
        with pytest.raises(ValueError):
            krappor_indirect_estimate(d, 10, 0.0, make_rng(0))
