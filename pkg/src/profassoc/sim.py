"""Synthetic data generators and a Monte-Carlo harness for level/power studies.

Every setting is parameterized by a dependence strength rho in [0, 1]; rho = 0
always yields (conditionally) independent columns. Monte-Carlo runs derive
per-run generator streams from the base seed, so results do not depend on the
worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed
from scipy.special import ndtri

from .cond import SmootherConfig, cond_independence_test
from .core import MetricObject, PairedDataset, _freeze
from .metrics import MetricId, quantile_grid_points, spd_geodesic_interp
from .perm import independence_test
from .validation import DataError

__all__ = [
    "SETTINGS",
    "SimulationConfig",
    "PowerTable",
    "generate",
    "rejection_rate",
    "power_curve",
]

QUANTILE_GRID_SIZE = 1000

POWER_TABLE_HEADER = ("rho", "rejection_rate", "mc_runs", "n", "alpha", "setting", "seed")


@dataclass(frozen=True)
class SimulationConfig:
    """One simulation scenario; ``rho`` quantifies the dependence strength."""

    setting: str
    n: int = 200
    rho: float = 0.0
    p: int | None = None
    mc_runs: int = 200
    alpha: float = 0.05
    seed: int = 0
    n_permutations: int = 199

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise DataError(
                f"unknown setting {self.setting!r}; valid settings: {', '.join(sorted(SETTINGS))}"
            )
        if not 0.0 <= self.rho <= 1.0:
            raise DataError(f"rho must lie in [0, 1], got {self.rho}")
        if self.n < 12:
            raise DataError(f"n must be at least 12, got {self.n}")
        if self.mc_runs < 1:
            raise DataError(f"mc_runs must be >= 1, got {self.mc_runs}")
        spec = SETTINGS[self.setting]
        if self.p is None:
            object.__setattr__(self, "p", spec.default_p)
        elif spec.fixed_p is not None and self.p != spec.fixed_p:
            raise DataError(f"setting {self.setting!r} requires p={spec.fixed_p}, got {self.p}")


@dataclass(frozen=True)
class _SettingSpec:
    generator: object
    metric_x: MetricId
    metric_y: MetricId
    conditional: bool
    default_p: int | None
    fixed_p: int | None = None


def _vec_objects(arr: np.ndarray) -> list[MetricObject]:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return [MetricObject("vector", row) for row in arr]


def _unit_objects(arr: np.ndarray) -> list[MetricObject]:
    return [MetricObject("unit_vector", row) for row in arr]


def _spd_objects(mats) -> list[MetricObject]:
    return [MetricObject("spd_matrix", m) for m in mats]


def _grid_objects(arr: np.ndarray) -> list[MetricObject]:
    return [MetricObject("quantile_grid", row) for row in arr]


def _gaussian_grids(mu: np.ndarray, sigma: np.ndarray, m: int = QUANTILE_GRID_SIZE) -> np.ndarray:
    base = ndtri(quantile_grid_points(m))
    return mu[:, None] + sigma[:, None] * base[None, :]


def _gen_r_lin(n, rho, p, rng):
    j_dep = max(1, int(0.1 * p))
    x = rng.standard_normal((n, p))
    y = rng.standard_normal((n, p))
    eps = rng.standard_normal((n, j_dep))
    y[:, :j_dep] = rho * x[:, :j_dep] + eps
    return _vec_objects(x), _vec_objects(y), None


def _gen_r_log(n, rho, p, rng):
    j_dep = max(1, int(0.1 * p))
    x = rng.standard_normal((n, p))
    y = rng.standard_normal((n, p))
    eps = rng.standard_normal((n, j_dep))
    y[:, :j_dep] = rho * np.log(4.0 * x[:, :j_dep] ** 2) + eps
    return _vec_objects(x), _vec_objects(y), None


def _gen_r_cir(n, rho, p, rng):
    # rho = 0 is the sup-norm limit: every draw from the square is accepted
    xs = np.empty(n)
    ys = np.empty(n)
    filled = 0
    while filled < n:
        batch = max(2 * (n - filled), 16)
        cand_x = rng.uniform(-1.0, 1.0, batch)
        cand_y = rng.uniform(-1.0, 1.0, batch)
        if rho == 0.0:
            keep = np.ones(batch, dtype=bool)
        else:
            zeta = 2.0 / rho
            keep = np.abs(cand_x) ** zeta + np.abs(cand_y) ** zeta <= 1.0
        take = min(int(keep.sum()), n - filled)
        xs[filled : filled + take] = cand_x[keep][:take]
        ys[filled : filled + take] = cand_y[keep][:take]
        filled += take
    return _vec_objects(xs[:, None]), _vec_objects(ys[:, None]), None


def _expm_sym(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    return (v * np.exp(w)) @ v.T


def _sqrtm_spd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.T


_SPD_SCALE = 0.6
_SPD_NOISE = 0.1
_SPD_CONGRUENCE = np.diag([2.0, 0.5])


def _spd_interp_pair(n, rho, rng):
    """Baseline/target pairs on the SPD manifold; the target sits near a
    congruence image of x, and y interpolates toward it at exponent rho / 5."""
    xs = []
    ys = []
    for _ in range(n):
        s = rng.normal(0.0, _SPD_SCALE, (2, 2))
        x = _expm_sym(0.5 * (s + s.T))
        s0 = rng.normal(0.0, _SPD_SCALE, (2, 2))
        y_base = _expm_sym(0.5 * (s0 + s0.T))
        p_mat = _SPD_CONGRUENCE @ x @ _SPD_CONGRUENCE.T
        e = rng.standard_normal((2, 2))
        noise = _expm_sym(_SPD_NOISE * 0.5 * (e + e.T))
        p_half = _sqrtm_spd(p_mat)
        y_target = p_half @ noise @ p_half
        y = spd_geodesic_interp(y_base, y_target, rho / 5.0)
        xs.append(x)
        ys.append(y)
    return xs, ys


def _gen_spd_interp(n, rho, p, rng):
    xs, ys = _spd_interp_pair(n, rho, rng)
    return _spd_objects(xs), _spd_objects(ys), None


def _upper_triangle_unit(mat: np.ndarray) -> np.ndarray:
    vec = np.array([mat[0, 0], mat[0, 1], mat[1, 1]])
    return vec / np.linalg.norm(vec)


def _gen_hybrid(n, rho, p, rng):
    xs, ys = _spd_interp_pair(n, rho, rng)
    units = np.stack([_upper_triangle_unit(m) for m in xs])
    return _unit_objects(units), _spd_objects(ys), None


def _gen_w2_mean(n, rho, p, rng):
    mu_x = rng.standard_normal(n)
    sigma_x = rng.uniform(0.0, 1.0, n)
    eps = rng.standard_normal(n)
    mu_y = 0.2 * eps * np.abs(mu_x) ** rho
    sigma_y = rng.uniform(1.0, 2.0, n)
    return _grid_objects(_gaussian_grids(mu_x, sigma_x)), _grid_objects(_gaussian_grids(mu_y, sigma_y)), None


def _gen_cond_sphere_log(n, rho, p, rng):
    z = rng.uniform(0.0, 1.0, n)
    eps = rng.standard_normal((n, 2 * p + 2))
    raw_x = np.column_stack([z + eps[:, 0], eps[:, 1 : p + 1]])
    raw_y = np.column_stack(
        [z + rho * np.log(4.0 * eps[:, 0] ** 2) + (1.0 - rho) * eps[:, p + 1], eps[:, p + 2 : 2 * p + 2]]
    )
    x = raw_x / np.linalg.norm(raw_x, axis=1, keepdims=True)
    y = raw_y / np.linalg.norm(raw_y, axis=1, keepdims=True)
    return _unit_objects(x), _unit_objects(y), z


def _gen_cond_w2_log(n, rho, p, rng):
    z = rng.uniform(0.0, 1.0, n)
    mu_x = z + rng.uniform(-1.0, 1.0, n)
    eps = rng.uniform(-1.0, 1.0, n)
    mu_y = z + rho * np.log(4.0 * mu_x**2) + eps
    ones = np.ones(n)
    return _grid_objects(_gaussian_grids(mu_x, ones)), _grid_objects(_gaussian_grids(mu_y, ones)), z


def _gen_cond_w2_sin(n, rho, p, rng):
    z = rng.uniform(0.0, 1.0, n)
    mu_x = z + rng.uniform(-1.0, 1.0, n)
    eps = rng.uniform(-1.0, 1.0, n)
    mu_y = z + rho * np.sin(mu_x * math.pi) + eps
    ones = np.ones(n)
    return _grid_objects(_gaussian_grids(mu_x, ones)), _grid_objects(_gaussian_grids(mu_y, ones)), z


SETTINGS = {
    "r_lin": _SettingSpec(_gen_r_lin, MetricId("euclidean"), MetricId("euclidean"), False, 2),
    "r_log": _SettingSpec(_gen_r_log, MetricId("euclidean"), MetricId("euclidean"), False, 2),
    "r_cir": _SettingSpec(_gen_r_cir, MetricId("euclidean"), MetricId("euclidean"), False, 1, fixed_p=1),
    "spd_interp": _SettingSpec(_gen_spd_interp, MetricId("spd_airm"), MetricId("spd_airm"), False, 2, fixed_p=2),
    "hybrid_sphere_spd": _SettingSpec(
        _gen_hybrid, MetricId("sphere_geodesic"), MetricId("spd_airm"), False, 2, fixed_p=2
    ),
    "w2_mean": _SettingSpec(_gen_w2_mean, MetricId("wasserstein1d"), MetricId("wasserstein1d"), False, None),
    "cond_sphere_log": _SettingSpec(
        _gen_cond_sphere_log, MetricId("sphere_geodesic"), MetricId("sphere_geodesic"), True, 2
    ),
    "cond_w2_log": _SettingSpec(_gen_cond_w2_log, MetricId("wasserstein1d"), MetricId("wasserstein1d"), True, None),
    "cond_w2_sin": _SettingSpec(_gen_cond_w2_sin, MetricId("wasserstein1d"), MetricId("wasserstein1d"), True, None),
}


def generate(cfg: SimulationConfig, rng: np.random.Generator) -> PairedDataset:
    """Draw one dataset from the configured setting."""
    spec = SETTINGS[cfg.setting]
    x_objects, y_objects, z = spec.generator(cfg.n, cfg.rho, cfg.p, rng)
    return PairedDataset(x_objects, y_objects, z=z, metric_x=spec.metric_x, metric_y=spec.metric_y)


def _single_run(cfg: SimulationConfig, seed_seq: np.random.SeedSequence) -> bool:
    data_seq, test_seq = seed_seq.spawn(2)
    ds = generate(cfg, np.random.default_rng(data_seq))
    test_seed = int(test_seq.generate_state(1, np.uint64)[0])
    if SETTINGS[cfg.setting].conditional:
        result = cond_independence_test(
            ds, cfg=SmootherConfig(), n_permutations=cfg.n_permutations, alpha=cfg.alpha, seed=test_seed
        )
    else:
        result = independence_test(
            ds,
            n_permutations=cfg.n_permutations,
            alpha=cfg.alpha,
            seed=test_seed,
            check_ties=False,
        )
    return bool(result.reject)


def rejection_rate(cfg: SimulationConfig, n_jobs: int = 1) -> float:
    """Fraction of Monte-Carlo runs rejecting at level alpha."""
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.mc_runs)
    if n_jobs == 1:
        flags = [_single_run(cfg, child) for child in children]
    else:
        flags = Parallel(n_jobs=n_jobs)(delayed(_single_run)(cfg, child) for child in children)
    return float(np.mean(flags))


@dataclass(frozen=True)
class PowerTable:
    """Rejection rates along a dependence grid for one setting."""

    rho_grid: np.ndarray
    rejection_rates: np.ndarray
    mc_runs: int
    config: SimulationConfig

    def __post_init__(self):
        grid = np.asarray(self.rho_grid, dtype=float)
        rates = np.asarray(self.rejection_rates, dtype=float)
        if grid.shape != rates.shape:
            raise DataError("rho grid and rates must have equal lengths")
        if rates.size and (rates.min() < 0.0 or rates.max() > 1.0):
            raise DataError("rejection rates must lie in [0, 1]")
        object.__setattr__(self, "rho_grid", _freeze(grid))
        object.__setattr__(self, "rejection_rates", _freeze(rates))

    def rows(self):
        for rho, rate in zip(self.rho_grid, self.rejection_rates):
            yield (
                float(rho),
                float(rate),
                self.mc_runs,
                self.config.n,
                self.config.alpha,
                self.config.setting,
                self.config.seed,
            )


def power_curve(cfg: SimulationConfig, rho_grid, n_jobs: int = 1) -> PowerTable:
    """Rejection rate at each dependence level; deterministic given (cfg, seed)
    and independent of ``n_jobs``."""
    rho_grid = np.asarray(rho_grid, dtype=float)
    if rho_grid.ndim != 1 or rho_grid.size == 0:
        raise DataError("rho grid must be a nonempty 1-d array")
    rates = []
    for offset, rho in enumerate(rho_grid):
        # distinct Monte-Carlo stream per grid entry
        run_cfg = replace(cfg, rho=float(rho), seed=cfg.seed + 7919 * offset)
        rates.append(rejection_rate(run_cfg, n_jobs=n_jobs))
    return PowerTable(rho_grid=rho_grid, rejection_rates=np.array(rates), mc_runs=cfg.mc_runs, config=cfg)
