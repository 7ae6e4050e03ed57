"""Conditional association given a scalar covariate.

Local-linear smoothing of distance-profile indicators yields conditional
profile estimates; per-anchor discrepancy integrals are smoothed into an
association curve, and the averaged discrepancy statistic is calibrated with
the same half-permutation scheme as the unconditional test (the covariate
travels with the y half under permutation).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .assoc import NORMALIZER, _dn_from_entries, build_dataset
from .core import PairedDataset, _freeze
from .perm import MIN_TEST_N, TestResult, _draw_seed, _p_value, draw_plan
from .validation import DataError

__all__ = [
    "KERNELS",
    "SmootherConfig",
    "LocalLinearWeights",
    "LocalFitError",
    "ConditionalAssociationCurve",
    "local_linear_weights",
    "local_linear_curve",
    "cond_profiles",
    "r_hat",
    "cond_association",
    "t_n_statistic",
    "cond_independence_test",
    "stratified_profile_association",
    "StratifiedAssociation",
    "ConditionalProfileAssociation",
    "ConditionalProfileIndependenceTest",
]


def _epanechnikov(t):
    return 0.75 * np.clip(1.0 - t * t, 0.0, None)


def _triangular(t):
    return np.clip(1.0 - np.abs(t), 0.0, None)


def _quartic(t):
    return 0.9375 * np.clip(1.0 - t * t, 0.0, None) ** 2


KERNELS = {
    "epanechnikov": _epanechnikov,
    "triangular": _triangular,
    "quartic": _quartic,
}


class LocalFitError(DataError):
    """Fewer than two distinct covariate values fall inside the window."""


@dataclass(frozen=True)
class SmootherConfig:
    """Kernel smoother settings.

    With ``bandwidth_rule="fixed"``, ``bandwidth`` is the window half-width h.
    With ``"rate_default"`` the bandwidth follows c * (n / log n)^(-1/5), where
    the scale c is ``bandwidth`` if given and the sample standard deviation of
    the covariate otherwise.
    """

    kernel: str = "epanechnikov"
    bandwidth: float | None = None
    bandwidth_rule: str = "rate_default"

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise DataError(f"unknown kernel {self.kernel!r}; valid kernels: {', '.join(KERNELS)}")
        if self.bandwidth_rule not in ("fixed", "rate_default"):
            raise DataError(f"bandwidth_rule must be 'fixed' or 'rate_default', got {self.bandwidth_rule!r}")
        if self.bandwidth_rule == "fixed" and (self.bandwidth is None or self.bandwidth <= 0):
            raise DataError("fixed bandwidth rule requires a positive bandwidth")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise DataError(f"bandwidth must be positive, got {self.bandwidth}")

    def resolve_bandwidth(self, z_values: np.ndarray) -> float:
        if self.bandwidth_rule == "fixed":
            return float(self.bandwidth)
        n = z_values.shape[0]
        scale = self.bandwidth
        if scale is None:
            if n < 2:
                raise DataError("rate_default bandwidth needs at least 2 covariate values")
            scale = float(np.std(z_values, ddof=1))
            if scale <= 0:
                raise DataError("covariate is constant; cannot derive a bandwidth scale")
        return float(scale) * (n / math.log(n)) ** (-0.2)


@dataclass(frozen=True)
class LocalLinearWeights:
    """Effective local-linear weights at one evaluation point; signed, sum to 1,
    and vanish outside the kernel window."""

    weights: np.ndarray
    center: float
    bandwidth: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if abs(float(w.sum()) - 1.0) > 1e-10:
            raise DataError("local-linear weights must sum to 1")
        object.__setattr__(self, "weights", _freeze(w))

    def fit(self, responses) -> float:
        return float(self.weights @ np.asarray(responses, dtype=float))


def _weight_rows(z_values: np.ndarray, centers: np.ndarray, h: float, kernel: str):
    """Local-linear weight rows for each center; rows without two distinct
    in-window covariate values are NaN and flagged in the returned mask."""
    kern = KERNELS[kernel]
    offsets = z_values[None, :] - centers[:, None]
    k = kern(offsets / h)
    s1 = (k * offsets).sum(axis=1)
    s2 = (k * offsets * offsets).sum(axis=1)
    raw = k * (s2[:, None] - offsets * s1[:, None])
    denom = raw.sum(axis=1)
    ok = np.empty(centers.shape[0], dtype=bool)
    for i in range(centers.shape[0]):
        inside = z_values[k[i] > 0]
        ok[i] = np.unique(inside).size >= 2 and denom[i] > 0
    rows = np.full_like(raw, np.nan)
    good = np.nonzero(ok)[0]
    rows[good] = raw[good] / denom[good, None]
    return rows, ok


def local_linear_weights(z_values, z: float, cfg: SmootherConfig | None = None) -> LocalLinearWeights:
    """Weights whose inner product with responses gives the local-linear fit at z.

    Reproduces affine functions of the covariate exactly; raises
    :class:`LocalFitError` when fewer than two distinct covariate values fall
    inside the window.
    """
    cfg = cfg or SmootherConfig()
    z_values = np.asarray(z_values, dtype=float)
    h = cfg.resolve_bandwidth(z_values)
    rows, ok = _weight_rows(z_values, np.array([float(z)]), h, cfg.kernel)
    if not ok[0]:
        raise LocalFitError(
            f"fewer than 2 distinct covariate values within bandwidth {h:.4g} of z={z:.6g}"
        )
    return LocalLinearWeights(weights=rows[0], center=float(z), bandwidth=h)


def _require_z(ds: PairedDataset):
    if not ds.has_z:
        raise DataError("this operation needs a dataset with a covariate column z")


RAW_FIT_WARN_BAND = (-0.05, 1.05)


def cond_profiles(
    ds: PairedDataset, anchor: int, z: float, u: float, v: float, cfg: SmootherConfig | None = None
):
    """Local-linear estimates of the marginal and joint conditional profiles at
    one anchor, covariate value, and radius pair; fits are clipped to [0, 1]."""
    _require_z(ds)
    if not 0 <= anchor < ds.n:
        raise DataError(f"anchor index {anchor} out of range for n={ds.n}")
    if u < 0 or v < 0:
        raise DataError("radii must be nonnegative")
    dx = ds.distance_matrix_x()
    dy = ds.distance_matrix_y()
    w = local_linear_weights(ds.z, z, cfg).weights
    rx = dx.entries[anchor] <= u
    ry = dy.entries[anchor] <= v
    raw = np.array([w @ rx, w @ ry, w @ (rx & ry)], dtype=float)
    if np.any(raw < RAW_FIT_WARN_BAND[0]) or np.any(raw > RAW_FIT_WARN_BAND[1]):
        warnings.warn(
            "conditional profile fit strays outside [-0.05, 1.05]; consider a larger bandwidth",
            UserWarning,
            stacklevel=2,
        )
    fx, fy, fxy = np.clip(raw, 0.0, 1.0)
    return float(fx), float(fy), float(fxy)


def _r_hat_from_rows(dx_row: np.ndarray, dy_row: np.ndarray, w: np.ndarray) -> float:
    """Exact integral of the squared joint/product discrepancy over the anchor's
    observed distance rectangle; the fitted profiles are step functions, so the
    integral is a finite sum over grid cells."""
    ux, ix = np.unique(dx_row, return_inverse=True)
    vy, iy = np.unique(dy_row, return_inverse=True)
    if ux.size < 2 or vy.size < 2:
        return 0.0
    mass = np.zeros((ux.size, vy.size))
    np.add.at(mass, (ix, iy), w)
    joint = mass.cumsum(axis=0).cumsum(axis=1)
    fx = joint[:, -1]
    fy = joint[-1, :]
    disc = joint - np.outer(fx, fy)
    du = np.diff(ux)
    dv = np.diff(vy)
    return float(du @ (disc[:-1, :-1] ** 2) @ dv)


def r_hat(ds: PairedDataset, j: int, cfg: SmootherConfig | None = None) -> float:
    """Integrated squared discrepancy between the joint and product-of-marginal
    conditional profiles at anchor j, evaluated at z = Z_j."""
    _require_z(ds)
    if not 0 <= j < ds.n:
        raise DataError(f"anchor index {j} out of range for n={ds.n}")
    dx = ds.distance_matrix_x()
    dy = ds.distance_matrix_y()
    w = local_linear_weights(ds.z, float(ds.z[j]), cfg).weights
    return _r_hat_from_rows(dx.entries[j], dy.entries[j], w)


@dataclass(frozen=True)
class ConditionalAssociationCurve:
    """Conditional association along a covariate grid; NaN marks grid points
    where the local fit was unusable."""

    z_grid: np.ndarray
    values: np.ndarray
    normalized_values: np.ndarray
    config: SmootherConfig

    def __post_init__(self):
        grid = np.asarray(self.z_grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        normed = np.asarray(self.normalized_values, dtype=float)
        if grid.shape != vals.shape or grid.shape != normed.shape:
            raise DataError("grid and value arrays must have equal lengths")
        if grid.size >= 2 and np.any(np.diff(grid) <= 0):
            raise DataError("z grid must be strictly increasing")
        object.__setattr__(self, "z_grid", _freeze(grid))
        object.__setattr__(self, "values", _freeze(vals))
        object.__setattr__(self, "normalized_values", _freeze(normed))


def local_linear_curve(z_values, responses, z_grid, cfg: SmootherConfig | None = None) -> np.ndarray:
    """Local-linear fits of ``responses`` against ``z_values`` on a grid;
    unusable grid points yield NaN (reported, not fatal)."""
    cfg = cfg or SmootherConfig()
    z_values = np.asarray(z_values, dtype=float)
    responses = np.asarray(responses, dtype=float)
    z_grid = np.asarray(z_grid, dtype=float)
    h = cfg.resolve_bandwidth(z_values)
    rows, ok = _weight_rows(z_values, z_grid, h, cfg.kernel)
    out = np.full(z_grid.shape, np.nan)
    good = np.nonzero(ok)[0]
    out[good] = rows[good] @ responses
    if not np.all(ok):
        bad = z_grid[~ok]
        warnings.warn(
            f"{bad.size} grid point(s) had fewer than 2 distinct in-window covariate values "
            f"(first at z={bad[0]:.6g}); their values are NaN",
            UserWarning,
            stacklevel=2,
        )
    return out


def default_z_grid(z_values, size: int = 50) -> np.ndarray:
    """Equispaced grid between the 5th and 95th covariate percentiles."""
    z_values = np.asarray(z_values, dtype=float)
    lo, hi = np.percentile(z_values, [5.0, 95.0])
    if not hi > lo:
        raise DataError("covariate range is degenerate; cannot build an evaluation grid")
    return np.linspace(lo, hi, size)


def cond_association(
    ds: PairedDataset, z_grid=None, cfg: SmootherConfig | None = None
) -> ConditionalAssociationCurve:
    """Conditional profile-association curve: per-anchor discrepancy integrals
    smoothed against the covariate on an evaluation grid."""
    _require_z(ds)
    cfg = cfg or SmootherConfig()
    z = ds.z
    if z_grid is None:
        z_grid = default_z_grid(z)
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.ndim != 1 or z_grid.size == 0:
        raise DataError("z grid must be a nonempty 1-d array")
    if z_grid.size >= 2 and np.any(np.diff(z_grid) <= 0):
        raise DataError("z grid must be strictly increasing")
    if z_grid[0] < z.min() or z_grid[-1] > z.max():
        raise DataError("z grid must lie inside the observed covariate range")
    dx = ds.distance_matrix_x()
    dy = ds.distance_matrix_y()
    h = cfg.resolve_bandwidth(z)
    anchor_rows, anchor_ok = _weight_rows(z, z, h, cfg.kernel)
    if not np.all(anchor_ok):
        bad = np.nonzero(~anchor_ok)[0]
        raise LocalFitError(
            f"no usable local fit at {bad.size} anchor covariate value(s) (first index {bad[0]}); "
            "increase the bandwidth"
        )
    r_values = np.array(
        [_r_hat_from_rows(dx.entries[j], dy.entries[j], anchor_rows[j]) for j in range(ds.n)]
    )
    values = local_linear_curve(z, r_values, z_grid, cfg)
    return ConditionalAssociationCurve(
        z_grid=z_grid, values=values, normalized_values=NORMALIZER * values, config=cfg
    )


def _t_n_from_parts(x: np.ndarray, y: np.ndarray, z: np.ndarray, cfg: SmootherConfig) -> float:
    n = x.shape[0]
    h = cfg.resolve_bandwidth(z)
    rows, ok = _weight_rows(z, z, h, cfg.kernel)
    if not np.all(ok):
        bad = np.nonzero(~ok)[0]
        raise LocalFitError(
            f"no usable local fit at {bad.size} anchor covariate value(s) (first index {bad[0]}); "
            "increase the bandwidth"
        )
    total = 0.0
    for i in range(n):
        w = rows[i]
        ax = x[i][None, :] <= x[i][:, None]
        ay = y[i][None, :] <= y[i][:, None]
        fx = ax @ w
        fy = ay @ w
        fxy = (ax & ay) @ w
        disc = fxy - fx * fy
        total += float(w @ (disc * disc))
    value = total / n
    if value < 0.0:
        warnings.warn(
            f"conditional statistic was slightly negative ({value:.3e}) through signed "
            "local-linear weights; floored at 0",
            UserWarning,
            stacklevel=3,
        )
        value = 0.0
    return value


def t_n_statistic(ds: PairedDataset, cfg: SmootherConfig | None = None) -> float:
    """Average integrated squared discrepancy between joint and product
    conditional profiles, integrated against the estimated joint profile
    measure (signed point masses at observed distance pairs)."""
    _require_z(ds)
    cfg = cfg or SmootherConfig()
    dx = ds.distance_matrix_x()
    dy = ds.distance_matrix_y()
    return _t_n_from_parts(dx.entries, dy.entries, ds.z, cfg)


def cond_independence_test(
    ds: PairedDataset,
    cfg: SmootherConfig | None = None,
    n_permutations: int = 500,
    alpha: float = 0.05,
    seed: int | None = None,
) -> TestResult:
    """Half-permutation test of conditional independence given the covariate.

    Permuted replicates keep x at the first half while y and z travel together
    through the permuted complement; the replicate scale is floor(n/2) times
    the replicate statistic, compared against n times the observed one.
    """
    _require_z(ds)
    if ds.n < MIN_TEST_N:
        raise DataError(f"the half-permutation test needs n >= {MIN_TEST_N}, got {ds.n}")
    if n_permutations < 1:
        raise DataError(f"n_permutations must be >= 1, got {n_permutations}")
    if not 0.0 < alpha <= 1.0:
        raise DataError(f"alpha must lie in (0, 1], got {alpha}")
    cfg = cfg or SmootherConfig()
    if seed is None:
        seed = _draw_seed()
    dx = ds.distance_matrix_x()
    dy = ds.distance_matrix_y()
    z = ds.z
    n = ds.n
    half = n // 2
    statistic = n * _t_n_from_parts(dx.entries, dy.entries, z, cfg)
    children = np.random.SeedSequence(seed).spawn(n_permutations)
    replicates = np.empty(n_permutations)
    for k, child in enumerate(children):
        plan = draw_plan(n, np.random.default_rng(child))
        sub_x = dx.entries[np.ix_(plan.pi, plan.pi)]
        sub_y = dy.entries[np.ix_(plan.sigma_pi_c, plan.sigma_pi_c)]
        sub_z = z[plan.sigma_pi_c]
        replicates[k] = half * _t_n_from_parts(sub_x, sub_y, sub_z, cfg)
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


@dataclass(frozen=True)
class StratifiedAssociation:
    """Per-category association values for a categorical covariate, aggregated
    by stratum size."""

    levels: np.ndarray
    counts: np.ndarray
    d_values: np.ndarray
    aggregate_d: float
    normalized: float


def stratified_profile_association(ds: PairedDataset, metric_x=None, metric_y=None) -> StratifiedAssociation:
    """Categorical-covariate fallback: the association statistic within each
    covariate category, aggregated with weights proportional to stratum size."""
    _require_z(ds)
    dx = ds.distance_matrix_x(metric_x)
    dy = ds.distance_matrix_y(metric_y)
    levels, inverse = np.unique(ds.z, return_inverse=True)
    counts = np.bincount(inverse)
    small = levels[counts < 6]
    if small.size:
        raise DataError(
            f"every covariate category needs at least 6 samples; undersized: {small.tolist()}"
        )
    d_values = np.empty(levels.size)
    for lvl in range(levels.size):
        idx = np.nonzero(inverse == lvl)[0]
        d_values[lvl] = _dn_from_entries(
            dx.entries[np.ix_(idx, idx)], dy.entries[np.ix_(idx, idx)]
        )
    aggregate = float(np.sum(counts / counts.sum() * d_values))
    return StratifiedAssociation(
        levels=levels,
        counts=counts,
        d_values=d_values,
        aggregate_d=aggregate,
        normalized=NORMALIZER * aggregate,
    )


class ConditionalProfileAssociation(BaseEstimator):
    """Estimator computing the conditional association curve from (X, y, z)."""

    def __init__(
        self,
        metric_x="euclidean",
        metric_y="euclidean",
        alpha_x=None,
        alpha_y=None,
        kernel="epanechnikov",
        bandwidth=None,
        bandwidth_rule="rate_default",
        grid=50,
    ):
        self.metric_x = metric_x
        self.metric_y = metric_y
        self.alpha_x = alpha_x
        self.alpha_y = alpha_y
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.bandwidth_rule = bandwidth_rule
        self.grid = grid

    def _config(self) -> SmootherConfig:
        return SmootherConfig(kernel=self.kernel, bandwidth=self.bandwidth, bandwidth_rule=self.bandwidth_rule)

    def fit(self, X, y, z):
        ds = build_dataset(
            X, y, z=z, metric_x=self.metric_x, metric_y=self.metric_y, alpha_x=self.alpha_x, alpha_y=self.alpha_y
        )
        grid = self.grid if not isinstance(self.grid, int) else default_z_grid(ds.z, self.grid)
        curve = cond_association(ds, z_grid=grid, cfg=self._config())
        self.curve_ = curve
        self.z_grid_ = curve.z_grid
        self.values_ = curve.values
        self.normalized_values_ = curve.normalized_values
        return self


class ConditionalProfileIndependenceTest(BaseEstimator):
    """Estimator wrapper around :func:`cond_independence_test`."""

    def __init__(
        self,
        metric_x="euclidean",
        metric_y="euclidean",
        alpha_x=None,
        alpha_y=None,
        kernel="epanechnikov",
        bandwidth=None,
        bandwidth_rule="rate_default",
        n_permutations=500,
        alpha=0.05,
        random_state=None,
    ):
        self.metric_x = metric_x
        self.metric_y = metric_y
        self.alpha_x = alpha_x
        self.alpha_y = alpha_y
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.bandwidth_rule = bandwidth_rule
        self.n_permutations = n_permutations
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y, z):
        ds = build_dataset(
            X, y, z=z, metric_x=self.metric_x, metric_y=self.metric_y, alpha_x=self.alpha_x, alpha_y=self.alpha_y
        )
        cfg = SmootherConfig(kernel=self.kernel, bandwidth=self.bandwidth, bandwidth_rule=self.bandwidth_rule)
        result = cond_independence_test(
            ds, cfg=cfg, n_permutations=self.n_permutations, alpha=self.alpha, seed=self.random_state
        )
        self.result_ = result
        self.statistic_ = result.statistic
        self.p_value_ = result.p_value
        self.reject_ = result.reject
        self.seed_ = result.seed
        return self
