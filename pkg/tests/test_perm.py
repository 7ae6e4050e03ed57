import numpy as np
import pytest

from profassoc.assoc import d_n_oracle
from profassoc.core import DistanceMatrix, PairedDataset
from profassoc.perm import (
    PermutationPlan,
    TestResult,
    draw_plan,
    h_hat_cdf,
    independence_test,
    permuted_statistic,
)
from profassoc.validation import DataError

from conftest import scalar_matrix


def scalar_dataset(rng, n, dependent=False):
    x = rng.normal(size=n)
    y = x if dependent else rng.normal(size=n)
    dx = DistanceMatrix(np.abs(x[:, None] - x[None, :]))
    dy = DistanceMatrix(np.abs(y[:, None] - y[None, :]))
    return PairedDataset(dx, dy)


class TestDrawPlan:
    def test_even_n_sizes(self, rng):
        plan = draw_plan(12, rng)
        assert plan.pi.size == 6 and plan.sigma_pi_c.size == 6
        assert not set(plan.pi) & set(plan.sigma_pi_c)

    def test_odd_n_leaves_one_out(self, rng):
        plan = draw_plan(13, rng)
        assert plan.pi.size == 6 and plan.sigma_pi_c.size == 6
        used = set(plan.pi) | set(plan.sigma_pi_c)
        assert len(used) == 12

    def test_pi_sorted(self, rng):
        for _ in range(20):
            plan = draw_plan(14, rng)
            assert np.all(np.diff(plan.pi) > 0)

    def test_uniform_membership_frequency(self):
        rng = np.random.default_rng(99)
        counts = np.zeros(12)
        draws = 10_000
        for _ in range(draws):
            counts[draw_plan(12, rng).pi] += 1
        freq = counts / draws
        assert np.all(np.abs(freq - 0.5) < 0.02)

    def test_small_n_rejected(self, rng):
        with pytest.raises(DataError):
            draw_plan(11, rng)

    def test_deterministic_given_seed(self):
        p1 = draw_plan(20, np.random.default_rng(5))
        p2 = draw_plan(20, np.random.default_rng(5))
        assert np.array_equal(p1.pi, p2.pi)
        assert np.array_equal(p1.sigma_pi_c, p2.sigma_pi_c)

    def test_plan_invariants_enforced(self):
        with pytest.raises(DataError):
            PermutationPlan(n=12, half=6, pi=np.arange(6), sigma_pi_c=np.arange(5, 11))


class TestPermutedStatistic:
    def test_matches_oracle_on_extracted_submatrices(self, rng):
        ds = scalar_dataset(rng, 12)
        dx = ds.distance_matrix_x()
        dy = ds.distance_matrix_y()
        plan = draw_plan(12, rng)
        sub_x = DistanceMatrix(dx.entries[np.ix_(plan.pi, plan.pi)])
        sub_y = DistanceMatrix(dy.entries[np.ix_(plan.sigma_pi_c, plan.sigma_pi_c)])
        assert permuted_statistic(dx, dy, plan) == pytest.approx(d_n_oracle(sub_x, sub_y), rel=1e-12)

    def test_reordering_sigma_changes_statistic_on_dependent_data(self, rng):
        ds = scalar_dataset(rng, 16, dependent=True)
        dx = ds.distance_matrix_x()
        dy = ds.distance_matrix_y()
        plan = draw_plan(16, np.random.default_rng(3))
        rolled = PermutationPlan(
            n=plan.n, half=plan.half, pi=plan.pi, sigma_pi_c=np.roll(plan.sigma_pi_c, 1)
        )
        assert permuted_statistic(dx, dy, plan) != permuted_statistic(dx, dy, rolled)

    def test_size_mismatch(self, rng):
        ds = scalar_dataset(rng, 12)
        plan = draw_plan(14, rng)
        with pytest.raises(DataError):
            permuted_statistic(ds.distance_matrix_x(), ds.distance_matrix_y(), plan)


class TestIndependenceTest:
    def test_p_value_formula_and_reject_flag(self, rng):
        ds = scalar_dataset(rng, 24)
        res = independence_test(ds, n_permutations=39, alpha=0.05, seed=7)
        exceed = int(np.count_nonzero(res.replicates >= res.statistic))
        assert res.p_value == (1 + exceed) / 40
        assert res.reject == (res.p_value <= res.alpha)
        assert res.replicates.shape == (39,)

    def test_deterministic_given_seed(self, rng):
        ds = scalar_dataset(rng, 20)
        r1 = independence_test(ds, n_permutations=19, alpha=0.05, seed=123)
        r2 = independence_test(ds, n_permutations=19, alpha=0.05, seed=123)
        assert r1.p_value == r2.p_value
        assert np.array_equal(r1.replicates, r2.replicates)

    def test_alpha_monotonicity(self, rng):
        ds = scalar_dataset(rng, 20)
        res = independence_test(ds, n_permutations=19, alpha=0.05, seed=1)
        for alpha in (0.01, 0.05, 0.2, 1.0):
            flag = res.p_value <= alpha
            if res.reject and alpha >= res.alpha:
                assert flag

    def test_alpha_one_always_rejects(self, rng):
        ds = scalar_dataset(rng, 20)
        res = independence_test(ds, n_permutations=19, alpha=1.0, seed=1)
        assert res.reject

    def test_comonotone_p_is_minimal(self):
        rng = np.random.default_rng(17)
        ds = scalar_dataset(rng, 100, dependent=True)
        res = independence_test(ds, n_permutations=199, alpha=0.05, seed=3)
        assert res.p_value == 1 / 200
        assert res.reject

    def test_invalid_argument_errors(self, rng):
        ds = scalar_dataset(rng, 20)
        with pytest.raises(DataError):
            independence_test(ds, n_permutations=0, seed=1)
        with pytest.raises(DataError):
            independence_test(ds, n_permutations=10, alpha=1.5, seed=1)
        small = scalar_dataset(rng, 11)
        with pytest.raises(DataError):
            independence_test(small, n_permutations=10, seed=1)

    def test_seed_drawn_and_recorded_when_absent(self, rng):
        ds = scalar_dataset(rng, 20)
        res = independence_test(ds, n_permutations=9)
        rerun = independence_test(ds, n_permutations=9, seed=res.seed)
        assert np.array_equal(res.replicates, rerun.replicates)

    def test_null_level_bounded(self):
        # validity smoke test at reduced scale; the acceptance suite runs the
        # paper-scale configuration
        rng = np.random.default_rng(29)
        runs = 100
        alpha = 0.05
        rejections = 0
        for k in range(runs):
            ds = scalar_dataset(rng, 50)
            res = independence_test(ds, n_permutations=99, alpha=alpha, seed=1000 + k)
            rejections += res.reject
        rate = rejections / runs
        assert rate <= alpha + 2 * np.sqrt(alpha * (1 - alpha) / runs) + 0.011


class TestResultInvariants:
    def test_replicate_count_checked(self):
        with pytest.raises(DataError):
            TestResult(
                statistic=1.0,
                replicates=np.zeros(3),
                p_value=0.5,
                alpha=0.05,
                reject=False,
                n_permutations=4,
                seed=0,
            )


class TestHHatCdf:
    def test_extremes(self):
        reps = [1.0, 2.0, 3.0]
        assert h_hat_cdf(reps, 0.5) == 0.0
        assert h_hat_cdf(reps, 3.0) == 1.0

    def test_right_continuity_step(self):
        reps = [1.0, 2.0]
        assert h_hat_cdf(reps, 1.0) == 0.5
        assert h_hat_cdf(reps, 1.0 - 1e-12) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            h_hat_cdf([], 0.0)

    def test_two_replicate_sets_agree(self):
        # reduced-scale stability check (acceptance runs N=500)
        rng = np.random.default_rng(31)
        ds = scalar_dataset(rng, 60)
        r1 = independence_test(ds, n_permutations=150, alpha=0.05, seed=1)
        r2 = independence_test(ds, n_permutations=150, alpha=0.05, seed=2)
        grid = np.concatenate([r1.replicates, r2.replicates])
        sup = max(abs(h_hat_cdf(r1.replicates, z) - h_hat_cdf(r2.replicates, z)) for z in grid)
        assert sup < 0.25
