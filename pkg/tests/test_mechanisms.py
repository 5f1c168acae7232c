"""Mechanism laws, privacy wrappers, and the continuous samplers.

The numeric constants in this file were frozen from closed forms computed
independently of the library code (notes kept with the frozen values).
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import laplace as scipy_laplace

from dperm.mechanisms import (
    LOG_UNDERFLOW,
    Mechanism,
    MechanismDistribution,
    PrivacyBudget,
    amplify_approx,
    amplify_pure,
    boost_high_confidence,
    boost_parts,
    em_scale,
    erm_mechanism,
    exponential_mechanism,
    laplace_erm_mean,
    laplace_icdf,
    logconcave_sampler,
    membership_flag_mechanism,
    pth_power_erm,
    pth_power_erm_batch,
    subsample_wrapper,
    two_stage_subset_selection,
)
from dperm.problems import (
    PROBLEM_BUILDERS,
    Dataset,
    discrete_points,
    labeled_threshold,
    objective_vector,
    uniform_box,
)
from dperm.seeding import trial_rng
from dperm.spaces import FiniteHypothesisSpace


def two_point_space():
    return FiniteHypothesisSpace(
        payloads=np.array([[0.0], [1.0]]), measure=np.ones(2)
    )


class TestBudget:
    def test_pure_flag(self):
        assert PrivacyBudget(1.0).pure
        assert not PrivacyBudget(1.0, 0.1).pure

    def test_validation(self):
        with pytest.raises(ValueError):
            PrivacyBudget(-0.5)
        with pytest.raises(ValueError):
            PrivacyBudget(1.0, delta=1.5)


class TestDistribution:
    def test_from_logits_normalizes(self):
        space = two_point_space()
        law = MechanismDistribution.from_logits(space, np.array([0.0, 1.0]))
        assert law.probabilities.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(np.exp(law.log_probabilities), law.probabilities)

    def test_rejects_bad_sum(self):
        space = two_point_space()
        with pytest.raises(ValueError):
            MechanismDistribution(
                space=space,
                probabilities=np.array([0.6, 0.6]),
                log_probabilities=np.log([0.6, 0.6]),
            )

    def test_rejects_log_mismatch(self):
        space = two_point_space()
        with pytest.raises(ValueError):
            MechanismDistribution(
                space=space,
                probabilities=np.array([0.5, 0.5]),
                log_probabilities=np.array([-0.5, -0.9]),
            )

    def test_rejects_representable_log_at_zero_mass(self):
        space = two_point_space()
        with pytest.raises(ValueError):
            MechanismDistribution(
                space=space,
                probabilities=np.array([1.0, 0.0]),
                log_probabilities=np.array([0.0, -600.0]),
            )

    def test_accepts_true_underflow(self):
        # log-weights spread beyond exp's range: the linear entry is 0.0 but
        # the log entry stays finite and must be accepted as consistent.
        space = two_point_space()
        law = MechanismDistribution.from_logits(space, np.array([0.0, -800.0]))
        assert law.probabilities[1] == 0.0
        assert law.log_probabilities[1] == pytest.approx(-800.0)
        assert law.log_probabilities[1] < LOG_UNDERFLOW

    def test_sampling_and_expectation(self):
        space = two_point_space()
        law = MechanismDistribution.from_probabilities(space, np.array([0.25, 0.75]))
        rng = np.random.default_rng(0)
        draws = [law.sample(rng) for _ in range(4000)]
        assert abs(np.mean(np.array(draws) == 1) - 0.75) < 0.03
        assert law.expectation(np.array([0.0, 4.0])) == pytest.approx(3.0)

    @given(st.lists(st.floats(-30, 30), min_size=2, max_size=50))
    @settings(max_examples=100)
    def test_from_logits_always_valid(self, logits):
        space = FiniteHypothesisSpace(
            payloads=np.arange(len(logits), dtype=float)[:, None],
            measure=np.ones(len(logits)),
        )
        law = MechanismDistribution.from_logits(space, np.array(logits))
        assert abs(law.probabilities.sum() - 1.0) <= 1e-12
        assert np.all(law.probabilities >= 0)


class TestExponentialMechanism:
    def test_two_point_closed_form(self):
        # One data point at 0.9 labeled 1, two threshold hypotheses with
        # losses (0, 1): P(good) = 1 / (1 + exp(-eps*n/4)).  At eps = 4, n = 1
        # that is the logistic value at 1.
        space = two_point_space()
        problem, _ = PROBLEM_BUILDERS["threshold"](resolution=2)
        data = Dataset(x=np.array([0.9]), y=np.array([1.0]))
        mech = exponential_mechanism(problem, space, epsilon=4.0)
        law = mech.law(data)
        assert law.probabilities[0] == pytest.approx(0.7310585786300049, abs=1e-15)

    def test_scale_convention(self):
        # Sensitivity of the mean objective is 2/n, so the exponent is
        # eps * n / 4.
        assert em_scale(2.0, 10) == pytest.approx(5.0)

    def test_law_prefers_lower_objective(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=16)
        data = labeled_threshold(0.5, support_size=32).sample(25, trial_rng(0, 0))
        law = exponential_mechanism(problem, space, 1.0).law(data)
        objectives = objective_vector(problem, space, data)
        order = np.argsort(objectives)
        probs = law.probabilities[order]
        assert np.all(np.diff(probs) <= 1e-15)

    def test_law_ignores_point_order(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=8)
        data = labeled_threshold(0.5, support_size=16).sample(12, trial_rng(5, 0))
        perm = np.random.default_rng(1).permutation(data.n)
        shuffled = Dataset(x=data.x[perm], y=data.y[perm])
        a = exponential_mechanism(problem, space, 1.0).law(data)
        b = exponential_mechanism(problem, space, 1.0).law(shuffled)
        assert np.array_equal(a.probabilities, b.probabilities)

    def test_huge_scale_underflow_is_handled(self):
        # Regression: at n = 10^4 the exponent scale is eps*n/4 = 2500 and
        # off-optimal hypotheses underflow the linear representation.
        problem, space = PROBLEM_BUILDERS["finite-support"]()
        data = uniform_box([0.0], [1.0]).sample(10_000, trial_rng(2, 0))
        law = exponential_mechanism(problem, space, 1.0).law(data)
        assert law.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.isfinite(law.log_probabilities[law.probabilities > 0]))

    def test_sampling_matches_law(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=4)
        data = labeled_threshold(0.5, support_size=8).sample(6, trial_rng(8, 0))
        mech = exponential_mechanism(problem, space, 1.0)
        law = mech.law(data).probabilities
        draws = np.array([mech.sample(data, seed=trial_rng(9, t).integers(2**63))
                          for t in range(3000)])
        freq = np.bincount(draws, minlength=space.size) / len(draws)
        assert np.max(np.abs(freq - law)) < 0.03

    def test_claimed_budget(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=4)
        mech = exponential_mechanism(problem, space, 0.7)
        assert mech.claimed_budget(50) == PrivacyBudget(0.7)

    def test_erm_point_mass(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=8)
        data = labeled_threshold(0.5, support_size=16).sample(15, trial_rng(3, 0))
        law = erm_mechanism(problem, space).law(data)
        assert np.sort(law.probabilities)[-1] == 1.0
        with pytest.raises(ValueError):
            erm_mechanism(problem, space).claimed_budget(15)


class TestAmplification:
    def test_pure_frozen_values(self):
        amp = amplify_pure(1.0, 0.25)
        assert amp.tight == pytest.approx(0.5293850802659188, abs=1e-15)
        assert amp.relaxed == pytest.approx(1.1752011936438014, abs=1e-15)

    def test_boundary_values(self):
        # The two-sided tight bound equals eps exactly at gamma = 1/2 and
        # climbs to 2 eps at gamma = 1.
        assert amplify_pure(1.0, 0.5).tight == pytest.approx(1.0, abs=1e-12)
        assert amplify_pure(1.0, 1.0).tight == pytest.approx(2.0)

    def test_approx_frozen_values(self):
        amp = amplify_approx(1.0, 0.01, 0.1)
        assert amp.epsilon == pytest.approx(0.383272276941325, abs=1e-15)
        assert amp.delta == pytest.approx(0.0027182818284590456, abs=1e-18)

    @given(st.floats(0.01, 3.0), st.floats(0.01, 1.0))
    @settings(max_examples=200)
    def test_tight_between_zero_and_relaxed(self, eps, gamma):
        amp = amplify_pure(eps, gamma)
        assert 0.0 <= amp.tight <= amp.relaxed + 1e-12
        assert amp.tight <= 2.0 * eps + 1e-12

    @given(st.floats(0.01, 3.0), st.floats(0.01, 0.49))
    @settings(max_examples=200)
    def test_amplification_shrinks_epsilon_below_half_rate(self, eps, gamma):
        assert amplify_pure(eps, gamma).tight < eps

    def test_input_validation(self):
        with pytest.raises(ValueError):
            amplify_pure(1.0, 0.0)
        with pytest.raises(ValueError):
            amplify_pure(1.0, 1.5)
        with pytest.raises(ValueError):
            amplify_approx(1.0, 1.5, 0.5)


def hypergeometric_subsample_law(base, dataset, m):
    """Independent oracle for the subsample mixture law.

    Groups the C(n, m) subsets by how many points they take from each
    distinct value, weighting each group by the multivariate hypergeometric
    count, instead of enumerating subsets one by one.
    """
    values = [tuple(np.atleast_1d(dataset.x[i]).tolist())
              + ((dataset.y[i],) if dataset.y is not None else ())
              for i in range(dataset.n)]
    distinct = sorted(set(values))
    counts = np.array([values.count(v) for v in distinct])
    total = math.comb(dataset.n, m)
    law = None
    for take in itertools.product(*[range(c + 1) for c in counts]):
        if sum(take) != m:
            continue
        weight = 1
        for t, c in zip(take, counts):
            weight *= math.comb(int(c), int(t))
        idx = []
        for v, t in zip(distinct, take):
            positions = [i for i, w in enumerate(values) if w == v]
            idx.extend(positions[:t])
        sub = dataset.take(np.array(sorted(idx), dtype=int))
        p = base.law(sub).probabilities * (weight / total)
        law = p if law is None else law + p
    return law


class TestSubsampling:
    def test_mixture_matches_hypergeometric_oracle(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=8)
        base = exponential_mechanism(problem, space, 1.0)
        data = Dataset(
            x=np.array([0.2, 0.2, 0.7, 0.7, 0.7]),
            y=np.array([0.0, 0.0, 1.0, 1.0, 1.0]),
        )
        for m in (1, 2, 3):
            wrapped = subsample_wrapper(base, m=m)
            assert wrapped.law_mode == "exact"
            law = wrapped.law(data).probabilities
            oracle = hypergeometric_subsample_law(base, data, m)
            assert np.allclose(law, oracle, atol=1e-12)

    def test_budget_fixed_m(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=8)
        base = exponential_mechanism(problem, space, 1.0)
        wrapped = subsample_wrapper(base, m=2)
        budget = wrapped.claimed_budget(8)
        assert budget.epsilon == pytest.approx(amplify_pure(1.0, 0.25).tight)
        assert budget.delta == 0.0

    def test_budget_sqrt_rule(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=8)
        raw = erm_mechanism(problem, space)
        wrapped = subsample_wrapper(raw, m="sqrt")
        budget = wrapped.claimed_budget(9)
        assert budget.epsilon == 0.0
        assert budget.delta == pytest.approx(1.0 / 3.0)

    def test_fixed_m_requires_base_claim(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=8)
        raw = erm_mechanism(problem, space)
        with pytest.raises(ValueError):
            subsample_wrapper(raw, m=2)

    def test_budget_approx_base(self):
        flag = membership_flag_mechanism(1.0, 0.01, marker=0.5)
        wrapped = subsample_wrapper(flag, m=1)
        budget = wrapped.claimed_budget(10)
        amp = amplify_approx(1.0, 0.01, 0.1)
        assert budget.epsilon == pytest.approx(amp.epsilon)
        assert budget.delta == pytest.approx(amp.delta)

    def test_sample_draws_only_m_points(self):
        # A mechanism that records the sub-dataset size it was handed.
        seen = []

        def spy_sample(dataset, seed):
            seen.append(dataset.n)
            return 0

        spy = Mechanism(
            name="spy", sample=spy_sample, budget=PrivacyBudget(1.0)
        )
        data = uniform_box([0.0], [1.0]).sample(12, trial_rng(0, 0))
        subsample_wrapper(spy, m=3).sample(data, seed=5)
        assert seen == [3]

    def test_sampled_law_mode_kicks_in(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=4)
        base = exponential_mechanism(problem, space, 1.0)
        wrapped = subsample_wrapper(base, m=3, exact_cap=2)
        data = labeled_threshold(0.5, support_size=8).sample(6, trial_rng(1, 0))
        assert wrapped.law_mode == "exact"
        law = wrapped.law(data)
        assert wrapped.law_mode == "sampled"
        assert law.probabilities.sum() == pytest.approx(1.0)


class TestMembershipFlag:
    def test_law_closed_form(self):
        eps, delta = 1.0, 0.1
        flag = membership_flag_mechanism(eps, delta, marker=0.25)
        present = Dataset(x=np.array([0.25, 0.75]), y=np.array([0.0, 1.0]))
        absent = Dataset(x=np.array([0.75, 0.75]), y=np.array([1.0, 1.0]))
        p_same = (1 - delta) * math.exp(eps) / (1 + math.exp(eps)) + delta
        law_present = flag.law(present).probabilities
        law_absent = flag.law(absent).probabilities
        assert law_present[1] == pytest.approx(p_same, abs=1e-15)
        assert law_absent[0] == pytest.approx(p_same, abs=1e-15)

    def test_budget(self):
        flag = membership_flag_mechanism(0.5, 0.05, marker=0.1)
        assert flag.claimed_budget(3) == PrivacyBudget(0.5, 0.05)
        assert flag.approximate


class TestLaplace:
    def test_icdf_center(self):
        assert laplace_icdf(0.5, scale=3.0) == 0.0

    @given(st.floats(0.001, 0.999), st.floats(0.1, 5.0))
    @settings(max_examples=200)
    def test_icdf_matches_scipy(self, u, scale):
        ours = laplace_icdf(u, scale)
        ref = scipy_laplace.ppf(u, loc=0.0, scale=scale)
        assert ours == pytest.approx(ref, rel=1e-9, abs=1e-9)

    def test_erm_mean_mechanism_clamps(self):
        problem, _ = PROBLEM_BUILDERS["pth-power"]()
        mech = laplace_erm_mean(problem, epsilon=0.01)
        data = uniform_box([0.0], [1.0]).sample(5, trial_rng(0, 0))
        draws = np.array([mech.sample(data, seed=s) for s in range(300)])
        assert draws.min() >= 0.0 and draws.max() <= 1.0
        assert mech.continuous and mech.law is None

    def test_erm_mean_deterministic_in_seed(self):
        problem, _ = PROBLEM_BUILDERS["pth-power"]()
        mech = laplace_erm_mean(problem, epsilon=1.0)
        data = uniform_box([0.0], [1.0]).sample(8, trial_rng(1, 0))
        assert mech.sample(data, seed=42) == mech.sample(data, seed=42)
        assert mech.sample(data, seed=42) != mech.sample(data, seed=43)


class TestPthPowerErm:
    def brute_minimum(self, x, p):
        grid = np.linspace(x.min(), x.max(), 200_001)
        vals = np.abs(x[None, :] - grid[:, None]) ** p
        return grid[np.argmin(vals.mean(axis=1))]

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            x = rng.uniform(0, 1, size=7)
            fast = pth_power_erm(x, p=10)
            slow = self.brute_minimum(x, 10)
            assert fast == pytest.approx(slow, abs=1e-4)

    def test_p2_is_the_mean(self):
        x = np.array([0.1, 0.5, 0.6])
        assert pth_power_erm(x, p=2) == pytest.approx(x.mean(), abs=1e-9)

    def test_batch_agrees_with_single(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, size=(6, 9))
        batch = pth_power_erm_batch(x, p=10)
        for row in range(6):
            assert batch[row] == pytest.approx(pth_power_erm(x[row], p=10), abs=1e-9)

    def test_constant_sample(self):
        assert pth_power_erm(np.array([0.3, 0.3, 0.3]), p=4) == pytest.approx(0.3)

    def test_odd_p_rejected(self):
        with pytest.raises(ValueError):
            pth_power_erm(np.array([0.1, 0.2]), p=3)


class TestBoosting:
    def test_part_layout(self):
        train, validation = boost_parts(10, 3)
        assert [t.tolist() for t in train] == [[0, 1], [2, 3], [4, 5]]
        assert validation.tolist() == [6, 7, 8, 9]

    def test_too_small_to_split(self):
        with pytest.raises(ValueError):
            boost_parts(3, 5)

    def test_budget_takes_worst_epsilon(self):
        problem, space = PROBLEM_BUILDERS["finite-support"](cells=4, max_subset_size=2)
        base = exponential_mechanism(problem, space, 2.0)
        boosted = boost_high_confidence(base, space, delta_target=0.2, epsilon=1.0)
        budget = boosted.claimed_budget(60)
        assert budget.epsilon == pytest.approx(2.0)
        assert boosted.info["parts"] == math.ceil(math.log(3 / 0.2))

    def test_exact_law_matches_sampling(self):
        # Small enough for tuple enumeration; GOF against 20k draws.
        from dperm.analysis import chi_square_gof

        problem, space = PROBLEM_BUILDERS["finite-support"](cells=3, max_subset_size=1)
        base = exponential_mechanism(problem, space, 1.0)
        boosted = boost_high_confidence(base, space, delta_target=0.5, epsilon=1.0)
        data = discrete_points(
            np.array([0.1, 0.5, 0.9]), probs=np.array([0.6, 0.3, 0.1])
        ).sample(12, trial_rng(0, 0))
        law = boosted.law(data).probabilities
        draws = np.array([boosted.sample(data, seed=trial_rng(1, t).integers(2**63))
                          for t in range(20_000)])
        counts = np.bincount(draws, minlength=space.size)
        result = chi_square_gof(law, counts)
        assert result.pvalue > 1e-3

    def test_over_cap_is_sample_only(self):
        # 93 hypotheses to the 5th power dwarfs the enumeration cap, so the
        # mechanism is built without a law and sampling still works.
        problem, space = PROBLEM_BUILDERS["finite-support"](cells=8, max_subset_size=3)
        base = exponential_mechanism(problem, space, 1.0)
        boosted = boost_high_confidence(base, space, delta_target=0.05, epsilon=1.0)
        assert boosted.law is None
        data = uniform_box([0.0], [1.0]).sample(60, trial_rng(2, 0))
        assert 0 <= boosted.sample(data, seed=1) < space.size


class TestTwoStageSelection:
    def test_law_is_distribution_and_private(self):
        from dperm.analysis import audit_pure_dp, exhaustive_neighbor_pairs

        problem, space = PROBLEM_BUILDERS["best-subset"](d=3, s=1, resolution=3)
        mech = two_stage_subset_selection(problem, space, epsilon=1.0)
        universe = Dataset(
            x=np.array([[0.2, 0.4, 0.6], [0.8, 0.1, 0.3]]),
            y=np.array([0.2, 0.9]),
        )
        pairs = exhaustive_neighbor_pairs(universe, 3)
        report = audit_pure_dp(mech, pairs)
        assert report.max_log_ratio <= 1.0 + 1e-9

    def test_requires_group_meta(self):
        problem, space = PROBLEM_BUILDERS["threshold"](resolution=4)
        with pytest.raises(ValueError):
            two_stage_subset_selection(problem, space, epsilon=1.0)


class TestRandomWalk:
    def test_acceptance_tuned_and_in_box(self):
        problem, _ = PROBLEM_BUILDERS["pth-power"]()
        data = uniform_box([0.0], [1.0]).sample(40, trial_rng(7, 0))
        sampler = logconcave_sampler(problem, [0.0], [1.0], 2.0, steps=20_000)
        result = sampler.run(data, seed=11)
        assert 0.15 <= result.acceptance_rate <= 0.65
        assert result.samples.min() >= 0.0
        assert result.samples.max() <= 1.0
        assert result.scale == em_scale(2.0, data.n)

    def test_deterministic_given_seed(self):
        problem, _ = PROBLEM_BUILDERS["pth-power"]()
        data = uniform_box([0.0], [1.0]).sample(10, trial_rng(7, 1))
        sampler = logconcave_sampler(problem, [0.0], [1.0], 1.0, steps=500)
        a = sampler.run(data, seed=3).samples
        b = sampler.run(data, seed=3).samples
        assert np.array_equal(a, b)

    def test_dimension_mismatch_rejected(self):
        problem, _ = PROBLEM_BUILDERS["pth-power"]()
        with pytest.raises(ValueError):
            logconcave_sampler(problem, [0.0, 0.0], [1.0], 1.0, steps=100)
