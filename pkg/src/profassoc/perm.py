"""Half-permutation calibration for the profile independence test.

Each replicate pairs one random half of the x sample with a permuted half of
the complementary y sample, which keeps the replicate pairs independent even
under the alternative. Replicates are compared on the scale n * D_n versus
floor(n/2) * D_{floor(n/2)}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .assoc import _dn_from_entries, _warn_on_ties, build_dataset, d_n_fast
from .core import DistanceMatrix, PairedDataset, _freeze
from .validation import DataError

__all__ = [
    "PermutationPlan",
    "TestResult",
    "draw_plan",
    "permuted_statistic",
    "independence_test",
    "h_hat_cdf",
    "ProfileIndependenceTest",
]

MIN_TEST_N = 12  # both permutation halves must keep >= 6 points
DEFAULT_PERMUTATIONS = 500


@dataclass(frozen=True)
class PermutationPlan:
    """One half-permutation: ``pi`` indexes the x half (ascending), and
    ``sigma_pi_c`` a permuted, equally sized draw from its complement."""

    n: int
    half: int
    pi: np.ndarray
    sigma_pi_c: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=int)
        sig = np.asarray(self.sigma_pi_c, dtype=int)
        if self.half != self.n // 2:
            raise DataError(f"half must equal n//2, got {self.half} for n={self.n}")
        if pi.shape != (self.half,) or sig.shape != (self.half,):
            raise DataError("both index lists must have floor(n/2) entries")
        if len(set(pi.tolist())) != self.half or len(set(sig.tolist())) != self.half:
            raise DataError("index lists must not repeat indices")
        if set(pi.tolist()) & set(sig.tolist()):
            raise DataError("pi and sigma_pi_c must be disjoint")
        for arr in (pi, sig):
            if arr.min() < 0 or arr.max() >= self.n:
                raise DataError("indices out of range")
        object.__setattr__(self, "pi", pi.copy())
        object.__setattr__(self, "sigma_pi_c", sig.copy())
        self.pi.setflags(write=False)
        self.sigma_pi_c.setflags(write=False)


def draw_plan(n: int, rng: np.random.Generator) -> PermutationPlan:
    """Draw a uniform half subset and an independent uniform ordering of its
    complement (truncated to the same size when n is odd)."""
    if n < MIN_TEST_N:
        raise DataError(f"the half-permutation test needs n >= {MIN_TEST_N}, got {n}")
    half = n // 2
    pi = np.sort(rng.choice(n, size=half, replace=False))
    complement = np.setdiff1d(np.arange(n), pi)
    sigma_pi_c = rng.permutation(complement)[:half]
    return PermutationPlan(n=n, half=half, pi=pi, sigma_pi_c=sigma_pi_c)


def permuted_statistic(dx: DistanceMatrix, dy: DistanceMatrix, plan: PermutationPlan) -> float:
    """U-statistic of the half sample pairing x at ``plan.pi`` with y at
    ``plan.sigma_pi_c`` (positional pairing on the induced submatrices)."""
    if dx.n != dy.n:
        raise DataError(f"distance matrices differ in size: {dx.n} vs {dy.n}")
    if dx.n != plan.n:
        raise DataError(f"plan was drawn for n={plan.n}, matrices have n={dx.n}")
    sub_x = dx.entries[np.ix_(plan.pi, plan.pi)]
    sub_y = dy.entries[np.ix_(plan.sigma_pi_c, plan.sigma_pi_c)]
    return _dn_from_entries(sub_x, sub_y)


@dataclass(frozen=True)
class TestResult:
    """Permutation-test outcome; replicates are stored on the comparison scale."""

    statistic: float
    replicates: np.ndarray
    p_value: float
    alpha: float
    reject: bool
    n_permutations: int
    seed: int

    def __post_init__(self):
        reps = np.asarray(self.replicates, dtype=float)
        if reps.shape != (self.n_permutations,):
            raise DataError("replicate count must equal n_permutations")
        object.__setattr__(self, "replicates", _freeze(reps))


def _p_value(statistic: float, replicates: np.ndarray, n_permutations: int) -> float:
    # ties count toward non-rejection
    exceed = int(np.count_nonzero(replicates >= statistic))
    return (1 + exceed) / (1 + n_permutations)


def _draw_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def independence_test(
    ds: PairedDataset,
    metric_x=None,
    metric_y=None,
    n_permutations: int = DEFAULT_PERMUTATIONS,
    alpha: float = 0.05,
    seed: int | None = None,
    check_ties: bool = True,
) -> TestResult:
    """Half-permutation test of independence between the two object columns.

    The observed statistic is n * D_n; each of the ``n_permutations`` replicates
    is floor(n/2) * D on an independently drawn half-permutation plan. The
    p-value is (1 + #{replicate >= statistic}) / (1 + N).
    """
    if ds.n < MIN_TEST_N:
        raise DataError(f"the half-permutation test needs n >= {MIN_TEST_N}, got {ds.n}")
    if n_permutations < 1:
        raise DataError(f"n_permutations must be >= 1, got {n_permutations}")
    if not 0.0 < alpha <= 1.0:
        raise DataError(f"alpha must lie in (0, 1], got {alpha}")
    if seed is None:
        seed = _draw_seed()
    dx = ds.distance_matrix_x(metric_x)
    dy = ds.distance_matrix_y(metric_y)
    if check_ties:
        _warn_on_ties(dx, dy)
    n = ds.n
    half = n // 2
    statistic = n * d_n_fast(dx, dy)
    children = np.random.SeedSequence(seed).spawn(n_permutations)
    replicates = np.empty(n_permutations)
    for k, child in enumerate(children):
        plan = draw_plan(n, np.random.default_rng(child))
        replicates[k] = half * permuted_statistic(dx, dy, plan)
    p = _p_value(statistic, replicates, n_permutations)
    return TestResult(
        statistic=statistic,
        replicates=replicates,
        p_value=p,
        alpha=alpha,
        reject=p <= alpha,
        n_permutations=n_permutations,
        seed=seed,
    )


def h_hat_cdf(replicates, z: float) -> float:
    """Empirical null CDF of the permuted replicates at z."""
    reps = np.asarray(replicates, dtype=float)
    if reps.size == 0:
        raise DataError("replicate list is empty")
    return float(np.count_nonzero(reps <= z)) / reps.size


class ProfileIndependenceTest(BaseEstimator):
    """Estimator wrapper around :func:`independence_test`.

    Attributes after ``fit``: ``statistic_``, ``replicates_``, ``p_value_``,
    ``reject_``, ``seed_`` and the full ``result_``.
    """

    def __init__(
        self,
        metric_x="euclidean",
        metric_y="euclidean",
        alpha_x=None,
        alpha_y=None,
        n_permutations=DEFAULT_PERMUTATIONS,
        alpha=0.05,
        random_state=None,
    ):
        self.metric_x = metric_x
        self.metric_y = metric_y
        self.alpha_x = alpha_x
        self.alpha_y = alpha_y
        self.n_permutations = n_permutations
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y):
        ds = build_dataset(
            X, y, metric_x=self.metric_x, metric_y=self.metric_y, alpha_x=self.alpha_x, alpha_y=self.alpha_y
        )
        result = independence_test(
            ds,
            n_permutations=self.n_permutations,
            alpha=self.alpha,
            seed=self.random_state,
        )
        self.result_ = result
        self.statistic_ = result.statistic
        self.replicates_ = result.replicates
        self.p_value_ = result.p_value
        self.reject_ = result.reject
        self.seed_ = result.seed
        return self
