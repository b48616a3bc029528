import json

import numpy as np
import pytest

from tiebreak import (AssignmentDistribution, CoefCovariance,
                      DegenerateDesignError, DomainError, IntervalRule,
                      RankDeficientError, SlidingScale, TieBreaker, mc)
from tiebreak.twoline import covariance_from_moments, covariance_gaussian
from tiebreak.moments import rule_moments
from tiebreak.quadratic import covariance_quadratic

from helpers import mgs_lstsq


def _window_mask(x, delta):
    return (np.abs(x) < delta) & (x > -delta)


class TestSampleAssignment:

    def test_deterministic_arms_outside_window(self):
        x = AssignmentDistribution.uniform_rank().points(801)
        rng = np.random.default_rng(0)
        z = mc.sample_assignment(rng, x, TieBreaker(0.5))
        assert np.all(z[x >= 0.5] == 1.0)
        assert np.all(z[x <= -0.5] == -1.0)
        assert set(np.unique(z)) == {-1.0, 1.0}

    def test_window_fraction_near_half(self):
        x = AssignmentDistribution.uniform_rank().points(4000)
        rng = np.random.default_rng(7)
        z = mc.sample_assignment(rng, x, TieBreaker(0.5))
        inside = np.abs(x) < 0.5
        frac = np.mean(z[inside] == 1.0)
        # 2000 fair coins: five sigmas is ~0.056.
        assert abs(frac - 0.5) < 0.06

    def test_uniform_consumption_is_scheme_independent(self):
        x = AssignmentDistribution.uniform_rank().points(101)
        rng_a = np.random.default_rng(42)
        rng_b = np.random.default_rng(42)
        mc.sample_assignment(rng_a, x, TieBreaker(0.5), scheme=mc.SIMPLE_RANDOM)
        mc.sample_assignment(rng_b, x, TieBreaker(0.5),
                             scheme=mc.STRATIFIED_PAIRS)
        np.testing.assert_array_equal(rng_a.standard_normal(8),
                                      rng_b.standard_normal(8))

    def test_stratified_pairs_balance(self):
        x = AssignmentDistribution.uniform_rank().points(1000)
        inside = _window_mask(x, 0.5)
        for seed in range(20):
            rng = np.random.default_rng(seed)
            z = mc.sample_assignment(rng, x, TieBreaker(0.5),
                                     scheme=mc.STRATIFIED_PAIRS)
            assert abs(z[inside].sum()) <= 1.0
            assert np.all(z[x >= 0.5] == 1.0)
            assert np.all(z[x <= -0.5] == -1.0)

    def test_stratified_pairs_are_consecutive(self):
        x = AssignmentDistribution.uniform_rank().points(500)
        idx = np.flatnonzero(_window_mask(x, 0.5))
        rng = np.random.default_rng(3)
        z = mc.sample_assignment(rng, x, TieBreaker(0.5),
                                 scheme=mc.STRATIFIED_PAIRS)
        npairs = idx.size // 2
        pair_sums = z[idx[:2 * npairs:2]] + z[idx[1:2 * npairs:2]]
        np.testing.assert_array_equal(pair_sums, np.zeros(npairs))

    def test_stratified_rejects_biased_coin(self):
        x = AssignmentDistribution.uniform_rank().points(50)
        rng = np.random.default_rng(0)
        with pytest.raises(DomainError):
            mc.sample_assignment(rng, x, TieBreaker(0.5, p=0.3),
                                 scheme=mc.STRATIFIED_PAIRS)

    def test_unknown_scheme_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DomainError):
            mc.sample_assignment(rng, np.zeros(4), TieBreaker(0.5),
                                 scheme="blocked")


class TestOlsFit:

    def _draw(self, rng, n, model):
        x = AssignmentDistribution.uniform_rank().points(n)
        f = mc.design_matrix(x, model)
        z = mc.sample_assignment(rng, x, TieBreaker(0.5))
        y = rng.standard_normal(n)
        return f, z, y

    @pytest.mark.parametrize("model", [mc.TWOLINE, mc.QUADRATIC])
    def test_matches_orthogonalized_least_squares(self, model):
        rng = np.random.default_rng(11)
        f, z, y = self._draw(rng, 600, model)
        coef = mc.ols_fit(f, z, y)
        full = np.hstack([f, z[:, None] * f])
        want = mgs_lstsq(full, y)
        if model == mc.QUADRATIC:
            want = want[list(mc._QUADRATIC_FIT_TO_NATURAL)]
        np.testing.assert_allclose(coef, want, rtol=1e-9, atol=1e-11)

    def test_precomputed_gram_changes_nothing(self):
        rng = np.random.default_rng(12)
        f, z, y = self._draw(rng, 300, mc.TWOLINE)
        a = mc.ols_fit(f, z, y)
        b = mc.ols_fit(f, z, y, gram=f.T @ f)
        np.testing.assert_array_equal(a, b)

    def test_exact_recovery_orders_quadratic_coefficients(self):
        # Noiseless outcomes pin the permutation from the grouped solve
        # back to (b0, b1, b2, b3, b4, b5).
        rng = np.random.default_rng(13)
        x = AssignmentDistribution.uniform_rank().points(400)
        f = mc.design_matrix(x, mc.QUADRATIC)
        z = mc.sample_assignment(rng, x, TieBreaker(0.5))
        baseline = np.array([0.5, -0.3, 0.2])
        interaction = np.array([1.0, 0.7, -0.4])
        y = f @ baseline + z * (f @ interaction)
        coef = mc.ols_fit(f, z, y)
        want = [0.5, -0.3, 1.0, 0.7, 0.2, -0.4]
        np.testing.assert_allclose(coef, want, atol=1e-10)

    def test_constant_arm_is_rank_deficient(self):
        x = AssignmentDistribution.uniform_rank().points(100)
        f = mc.design_matrix(x, mc.TWOLINE)
        with pytest.raises(RankDeficientError):
            mc.ols_fit(f, np.ones(100), np.zeros(100))


class TestPluSolve:

    def test_matches_linalg_solve(self):
        rng = np.random.default_rng(21)
        for k in (2, 4, 6):
            m = rng.normal(size=(k, k))
            spd = m @ m.T + k * np.eye(k)
            rhs = rng.normal(size=k)
            np.testing.assert_allclose(mc._plu_solve(spd, rhs),
                                       np.linalg.solve(spd, rhs), rtol=1e-10)

    def test_singular_raises(self):
        mat = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(RankDeficientError):
            mc._plu_solve(mat, np.ones(2))


class TestEmpiricalCovariance:

    def test_hand_example(self):
        coefs = np.array([[0.0, 0.0], [2.0, 4.0]])
        got = mc.empirical_covariance(coefs, 10)
        np.testing.assert_allclose(got, [[20.0, 40.0], [40.0, 80.0]])

    def test_needs_two_replicates(self):
        with pytest.raises(DomainError):
            mc.empirical_covariance(np.ones((1, 4)), 10)


class TestClosedFormReference:

    def test_uniform_tie_breaker(self):
        config = mc.SimConfig(rule=TieBreaker(0.5))
        got = mc.closed_form_reference(config)
        want = covariance_from_moments(rule_moments(TieBreaker(0.5)), full=True)
        np.testing.assert_allclose(got.matrix, want.matrix)

    def test_uniform_sliding_scale(self):
        scale = SlidingScale.from_table([-1.0, 1.0], [0.0, 1.0])
        config = mc.SimConfig(rule=scale)
        got = mc.closed_form_reference(config)
        want = covariance_from_moments(rule_moments(scale), full=True)
        np.testing.assert_allclose(got.matrix, want.matrix)

    def test_gaussian_fair_window(self):
        config = mc.SimConfig(rule=TieBreaker(0.5),
                              distribution=AssignmentDistribution.standard_gaussian())
        got = mc.closed_form_reference(config)
        np.testing.assert_allclose(got.matrix,
                                   covariance_gaussian(0.5, full=True).matrix)

    def test_quadratic_uniform_window(self):
        config = mc.SimConfig(rule=TieBreaker(0.5), model=mc.QUADRATIC)
        got = mc.closed_form_reference(config)
        np.testing.assert_allclose(got.matrix, covariance_quadratic(0.5).matrix)

    def test_no_closed_form_cases(self):
        gauss = AssignmentDistribution.standard_gaussian()
        emp = AssignmentDistribution.empirical([0.1, -0.4, 0.9, 0.3])
        scale = SlidingScale.from_table([-1.0, 1.0], [0.0, 1.0])
        bad = [
            mc.SimConfig(rule=TieBreaker(0.5), distribution=emp),
            mc.SimConfig(rule=IntervalRule(-0.2, 0.6), distribution=gauss),
            mc.SimConfig(rule=TieBreaker(0.5, p=0.3), distribution=gauss),
            mc.SimConfig(rule=scale, model=mc.QUADRATIC),
            mc.SimConfig(rule=IntervalRule(-0.2, 0.6), model=mc.QUADRATIC),
        ]
        for config in bad:
            with pytest.raises(DomainError):
                mc.closed_form_reference(config)


class TestSimConfig:

    def test_rejects_bad_settings(self):
        rule = TieBreaker(0.5)
        with pytest.raises(DomainError):
            mc.SimConfig(rule=rule, n=3)
        with pytest.raises(DomainError):
            mc.SimConfig(rule=rule, reps=1)
        with pytest.raises(DomainError):
            mc.SimConfig(rule=rule, seed=-1)
        with pytest.raises(DomainError):
            mc.SimConfig(rule=rule, sigma=0.0)
        with pytest.raises(DomainError):
            mc.SimConfig(rule=rule, model="cubic")
        with pytest.raises(DomainError):
            mc.SimConfig(rule=rule, baseline=(1.0, 2.0, 3.0))

    def test_default_coefficients_are_zero(self):
        config = mc.SimConfig(rule=TieBreaker(0.5), model=mc.QUADRATIC)
        assert config.baseline == (0.0, 0.0, 0.0)
        assert config.interaction == (0.0, 0.0, 0.0)


class TestRunSimulation:

    def test_agreement_with_closed_form(self):
        config = mc.SimConfig(rule=TieBreaker(0.5), n=2000, reps=400, seed=5)
        report = mc.run_simulation(config)
        assert report.reference is not None
        assert report.max_dev_se < 4.0
        assert report.reps_used == 400
        assert report.degenerate == 0

    def test_repeat_runs_bit_identical(self):
        config = mc.SimConfig(rule=TieBreaker(0.5), n=400, reps=60, seed=9)
        first = mc.run_simulation(config)
        second = mc.run_simulation(config)
        assert np.array_equal(first.empirical, second.empirical)
        assert np.array_equal(first.coef_mean, second.coef_mean)

    def test_kernel_paths_agree(self):
        config = mc.SimConfig(rule=TieBreaker(0.5), n=400, reps=60, seed=9)
        plain = mc.run_simulation(config, jit=False)
        fast = mc.run_simulation(config, jit=True)
        np.testing.assert_allclose(plain.empirical, fast.empirical,
                                   rtol=1e-9, atol=1e-9)

    def test_sigma_scales_covariances(self):
        base = mc.SimConfig(rule=TieBreaker(0.5), n=400, reps=80, seed=2)
        loud = mc.SimConfig(rule=TieBreaker(0.5), n=400, reps=80, seed=2,
                            sigma=2.0)
        rep1 = mc.run_simulation(base)
        rep2 = mc.run_simulation(loud)
        np.testing.assert_allclose(rep2.reference, 4.0 * rep1.reference,
                                   rtol=1e-14)
        np.testing.assert_allclose(rep2.empirical, 4.0 * rep1.empirical,
                                   rtol=1e-10)

    def test_degenerate_design_raises(self):
        # Four subjects all inside the window: about one replicate in
        # eight realizes a single arm and cannot be fitted.
        config = mc.SimConfig(rule=TieBreaker(1.0), n=4, reps=200, seed=0)
        with pytest.raises(DegenerateDesignError):
            mc.run_simulation(config)

    def test_reference_override_flags_disagreement(self):
        config = mc.SimConfig(rule=TieBreaker(0.5), n=1000, reps=300, seed=4)
        honest = mc.closed_form_reference(config)
        wrong = CoefCovariance(honest.labels, honest.matrix * 3.0)
        report = mc.run_simulation(config, reference=wrong)
        assert report.max_dev_se > 4.0

    def test_unreferenced_run_reports_empirical_only(self):
        emp = AssignmentDistribution.empirical(
            np.linspace(-2.0, 3.0, 101).tolist())
        config = mc.SimConfig(rule=TieBreaker(0.5), distribution=emp,
                              n=101, reps=50, seed=1)
        report = mc.run_simulation(config)
        assert report.reference is None
        assert report.max_dev_se is None
        assert report.se.shape == (4, 4)
        with pytest.raises(DomainError):
            mc.run_simulation(config, require_reference=True)

    def test_quadratic_run_recovers_true_coefficients(self):
        config = mc.SimConfig(rule=TieBreaker(0.5), model=mc.QUADRATIC,
                              n=2000, reps=60, seed=8, sigma=0.05,
                              baseline=(0.5, -0.3, 0.2),
                              interaction=(1.0, 0.7, -0.4))
        report = mc.run_simulation(config)
        want = [0.5, -0.3, 1.0, 0.7, 0.2, -0.4]
        np.testing.assert_allclose(report.coef_mean, want, atol=5e-3)
        assert report.max_dev_se < 5.0

    def test_stratified_pairs_remove_assignment_noise(self):
        # With sigma fixed, the only replicate-to-replicate variation in
        # the realized information for beta2 comes from the arm draws.
        # Pairing pins the window's z-sums, so the realized N [G^-1]_22
        # collapses to its limit while fair coins scatter around it.
        x = AssignmentDistribution.uniform_rank().points(1000)
        f = mc.design_matrix(x, mc.TWOLINE)
        gram = f.T @ f

        def realized(scheme, seed):
            rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
            z = mc.sample_assignment(rng, x, TieBreaker(1.0), scheme=scheme)
            full = np.hstack([f, z[:, None] * f])
            ginv = np.linalg.inv(full.T @ full)
            return 1000.0 * ginv[2, 2]

        simple = np.array([realized(mc.SIMPLE_RANDOM, s) for s in range(200)])
        paired = np.array([realized(mc.STRATIFIED_PAIRS, s)
                           for s in range(200)])
        assert paired.mean() < simple.mean()
        assert paired.std() < 1e-6
        assert abs(simple.mean() - 1.0) < 0.02
        assert abs(paired.mean() - 1.0) < 1e-6


class TestSimReport:

    def test_to_dict_round_trips_through_json(self):
        config = mc.SimConfig(rule=TieBreaker(0.5), n=400, reps=50, seed=3)
        report = mc.run_simulation(config)
        payload = json.loads(json.dumps(report.to_dict()))
        assert payload["rule"] == {"type": "TieBreaker", "delta": 0.5, "p": 0.5}
        assert payload["labels"] == ["beta0", "beta1", "beta2", "beta3"]
        assert len(payload["empirical"]) == 4
        assert payload["reps_used"] == 50
        assert payload["max_dev_se"] < 10.0
