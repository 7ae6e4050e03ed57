"""Scalar distances for the supported object spaces, plus SPD geodesic interpolation.

Every metric is a pure function of two payloads. ``pairwise_distances`` evaluates
a metric over all unordered pairs of a sample, with vectorized fast paths that
are validated against the scalar per-pair loop in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .validation import (
    DataError,
    NumericalError,
    check_quantile_grid,
    check_spd,
    check_unit_vector,
    check_vector,
)

__all__ = [
    "METRIC_NAMES",
    "MetricId",
    "resolve_metric",
    "tag_for_metric",
    "euclidean",
    "sphere_geodesic",
    "spd_frobenius",
    "spd_airm",
    "spd_log_cholesky",
    "spd_power",
    "spd_bures_wasserstein",
    "wasserstein1d",
    "spd_geodesic_interp",
    "quantile_grid_points",
    "pairwise_distances",
]

METRIC_NAMES = (
    "euclidean",
    "sphere_geodesic",
    "spd_frobenius",
    "spd_airm",
    "spd_log_cholesky",
    "spd_power",
    "spd_bures_wasserstein",
    "wasserstein1d",
)

_METRIC_TAGS = {
    "euclidean": "vector",
    "sphere_geodesic": "unit_vector",
    "spd_frobenius": "spd_matrix",
    "spd_airm": "spd_matrix",
    "spd_log_cholesky": "spd_matrix",
    "spd_power": "spd_matrix",
    "spd_bures_wasserstein": "spd_matrix",
    "wasserstein1d": "quantile_grid",
}


@dataclass(frozen=True)
class MetricId:
    """Identifier of a metric; ``alpha`` is the exponent of the power metric."""

    name: str
    alpha: float | None = None

    def __post_init__(self):
        if self.name not in METRIC_NAMES:
            raise DataError(f"unknown metric {self.name!r}; valid names: {', '.join(METRIC_NAMES)}")
        if self.name == "spd_power":
            if self.alpha is None:
                raise DataError("spd_power requires an alpha exponent in (0, 1]")
            if not 0.0 < float(self.alpha) <= 1.0:
                raise DataError(f"spd_power alpha must lie in (0, 1], got {self.alpha}")
        elif self.alpha is not None:
            raise DataError(f"metric {self.name!r} does not take an alpha parameter")


def resolve_metric(metric, alpha: float | None = None) -> MetricId:
    if isinstance(metric, MetricId):
        if alpha is not None and metric.alpha != alpha:
            raise DataError("conflicting alpha values for metric")
        return metric
    if not isinstance(metric, str):
        raise DataError(f"metric must be a name or MetricId, got {type(metric).__name__}")
    return MetricId(metric, alpha)


def tag_for_metric(metric) -> str:
    return _METRIC_TAGS[resolve_metric(metric).name]


# ---------------------------------------------------------------------------
# scalar metrics


def euclidean(u, v) -> float:
    u = check_vector(u, "u")
    v = check_vector(v, "v")
    if u.shape != v.shape:
        raise DataError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    return float(np.linalg.norm(u - v))


def sphere_geodesic(u, v) -> float:
    """Great-circle distance on the unit sphere; inputs must be unit vectors (tol 1e-6).

    Equals the arccos of the clamped inner product; evaluated through
    2*atan2(|u - v|, |u + v|), which is exact at coincident and antipodal pairs
    where arccos loses precision.
    """
    u = check_unit_vector(u, tol=1e-6, name="u")
    v = check_unit_vector(v, tol=1e-6, name="v")
    if u.shape != v.shape:
        raise DataError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    return float(2.0 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def _check_spd_pair(a, b):
    a = check_spd(a, "A")
    b = check_spd(b, "B")
    if a.shape != b.shape:
        raise DataError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def _sym(a: np.ndarray) -> np.ndarray:
    # absorb roundoff before eigendecompositions
    return 0.5 * (a + a.T)


def _eigh(a: np.ndarray):
    try:
        return np.linalg.eigh(_sym(a))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc


def _spd_fractional(a: np.ndarray, power: float) -> np.ndarray:
    w, vecs = _eigh(a)
    w = np.maximum(w, np.finfo(float).tiny)
    return _sym((vecs * w**power) @ vecs.T)


def spd_frobenius(a, b) -> float:
    a, b = _check_spd_pair(a, b)
    return float(np.linalg.norm(a - b, "fro"))


def spd_airm(a, b) -> float:
    """Affine-invariant Riemannian distance.

    Evaluated as the Frobenius norm of log(A^{-1/2} B A^{-1/2}); the whitened
    form shares its eigenvalues with A^{-1}B but stays symmetric throughout.
    """
    a, b = _check_spd_pair(a, b)
    inv_sqrt = _spd_fractional(a, -0.5)
    lam = np.linalg.eigvalsh(_sym(inv_sqrt @ b @ inv_sqrt))
    lam = np.maximum(lam, np.finfo(float).tiny)
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def _log_cholesky_repr(a: np.ndarray) -> np.ndarray:
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Cholesky factorization failed: {exc}") from exc
    out = np.tril(lower, -1)
    np.fill_diagonal(out, np.log(np.diag(lower)))
    return out


def spd_log_cholesky(a, b) -> float:
    """Frobenius distance between Cholesky factors, with log-transformed diagonals."""
    a, b = _check_spd_pair(a, b)
    return float(np.linalg.norm(_log_cholesky_repr(a) - _log_cholesky_repr(b), "fro"))


def spd_power(a, b, alpha: float) -> float:
    a, b = _check_spd_pair(a, b)
    if not alpha > 0:
        raise DataError(f"alpha must be positive, got {alpha}")
    return float(np.linalg.norm(_spd_fractional(a, alpha) - _spd_fractional(b, alpha), "fro"))


def spd_bures_wasserstein(a, b) -> float:
    a, b = _check_spd_pair(a, b)
    sqrt_a = _spd_fractional(a, 0.5)
    lam = np.linalg.eigvalsh(_sym(sqrt_a @ b @ sqrt_a))
    lam = np.maximum(lam, 0.0)
    val = float(np.trace(a) + np.trace(b) - 2.0 * np.sum(np.sqrt(lam)))
    return float(np.sqrt(max(val, 0.0)))


def quantile_grid_points(m: int) -> np.ndarray:
    """Equispaced interior probabilities (k - 1/2)/m used to tabulate quantile functions."""
    if m < 2:
        raise DataError(f"quantile grid needs at least 2 points, got {m}")
    return (np.arange(m) + 0.5) / m


def wasserstein1d(qx, qy) -> float:
    """2-Wasserstein distance between 1-d distributions tabulated as quantile grids.

    Trapezoid-rule approximation of the squared quantile discrepancy on the
    shared interior grid (k - 1/2)/m.
    """
    qx = check_quantile_grid(qx, "Qx")
    qy = check_quantile_grid(qy, "Qy")
    if qx.shape != qy.shape:
        raise DataError(f"grid size mismatch: {qx.shape[0]} vs {qy.shape[0]}")
    if qx.size < 2:
        raise DataError("quantile grids need at least 2 points")
    u = quantile_grid_points(qx.size)
    val = float(np.trapezoid((qx - qy) ** 2, u))
    return float(np.sqrt(max(val, 0.0)))


def spd_geodesic_interp(a, b, rho: float) -> np.ndarray:
    """Point at parameter ``rho`` on the affine-invariant geodesic from A to B."""
    a, b = _check_spd_pair(a, b)
    if not 0.0 <= rho <= 1.0:
        raise DataError(f"rho must lie in [0, 1], got {rho}")
    if rho == 0.0:
        return a.copy()
    sqrt_a = _spd_fractional(a, 0.5)
    inv_sqrt_a = _spd_fractional(a, -0.5)
    mid = _spd_fractional(_sym(inv_sqrt_a @ b @ inv_sqrt_a), rho)
    return _sym(sqrt_a @ mid @ sqrt_a)


# ---------------------------------------------------------------------------
# pairwise evaluation

_SCALAR_FUNCS = {
    "euclidean": euclidean,
    "sphere_geodesic": sphere_geodesic,
    "spd_frobenius": spd_frobenius,
    "spd_airm": spd_airm,
    "spd_log_cholesky": spd_log_cholesky,
    "spd_bures_wasserstein": spd_bures_wasserstein,
    "wasserstein1d": wasserstein1d,
}


def metric_function(metric, alpha: float | None = None):
    """Return a two-argument distance callable for the given metric."""
    mid = resolve_metric(metric, alpha)
    if mid.name == "spd_power":
        return lambda a, b: spd_power(a, b, mid.alpha)
    return _SCALAR_FUNCS[mid.name]


def _condensed_to_square(values: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n))
    iu, ju = np.triu_indices(n, 1)
    out[iu, ju] = values
    out[ju, iu] = values
    return out


def _pairwise_loop(payloads, mid: MetricId) -> np.ndarray:
    """Reference per-pair evaluation; every unordered pair computed once."""
    fn = metric_function(mid)
    n = len(payloads)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = fn(payloads[i], payloads[j])
            out[i, j] = d
            out[j, i] = d
    return out


def _pairwise_airm_2x2(mats: np.ndarray) -> np.ndarray:
    # closed-form generalized eigenvalues of 2x2 SPD pencils
    n = mats.shape[0]
    iu, ju = np.triu_indices(n, 1)
    a = mats[iu]
    b = mats[ju]
    det_a = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] ** 2
    det_b = b[:, 0, 0] * b[:, 1, 1] - b[:, 0, 1] ** 2
    trace = (a[:, 1, 1] * b[:, 0, 0] + a[:, 0, 0] * b[:, 1, 1] - 2.0 * a[:, 0, 1] * b[:, 0, 1]) / det_a
    ratio = det_b / det_a
    disc = np.sqrt(np.maximum(trace**2 - 4.0 * ratio, 0.0))
    lam_hi = np.maximum(0.5 * (trace + disc), np.finfo(float).tiny)
    lam_lo = np.maximum(0.5 * (trace - disc), np.finfo(float).tiny)
    vals = np.sqrt(np.log(lam_hi) ** 2 + np.log(lam_lo) ** 2)
    return _condensed_to_square(vals, n)


def _pairwise_sphere(vectors: np.ndarray) -> np.ndarray:
    n = vectors.shape[0]
    iu, ju = np.triu_indices(n, 1)
    diff = np.linalg.norm(vectors[iu] - vectors[ju], axis=1)
    summ = np.linalg.norm(vectors[iu] + vectors[ju], axis=1)
    return _condensed_to_square(2.0 * np.arctan2(diff, summ), n)


def _pairwise_wasserstein(grids: np.ndarray) -> np.ndarray:
    n, m = grids.shape
    u = quantile_grid_points(m)
    out = np.zeros((n, n))
    for i in range(n - 1):
        diff = grids[i + 1 :] - grids[i]
        vals = np.sqrt(np.maximum(np.trapezoid(diff**2, u, axis=1), 0.0))
        out[i, i + 1 :] = vals
        out[i + 1 :, i] = vals
    return out


def pairwise_distances(payloads, metric, alpha: float | None = None) -> np.ndarray:
    """Distance matrix over a homogeneous sample of payloads.

    ``payloads`` is a stacked array ((n, p) vectors, (n, p, p) SPD matrices, or
    (n, m) quantile grids) or a sequence of per-object arrays. Fast paths reduce
    to scipy ``pdist`` or closed forms where the metric allows; they agree with
    the per-pair scalar loop to floating-point accuracy.
    """
    mid = resolve_metric(metric, alpha)
    stacked = payloads if isinstance(payloads, np.ndarray) else np.stack([np.asarray(p, dtype=float) for p in payloads])
    n = stacked.shape[0]
    if n == 0:
        raise DataError("empty object sample")

    if mid.name == "euclidean":
        return squareform(pdist(stacked.reshape(n, -1)))
    if mid.name == "sphere_geodesic":
        return _pairwise_sphere(stacked)
    if mid.name == "spd_frobenius":
        return squareform(pdist(stacked.reshape(n, -1)))
    if mid.name == "spd_power":
        powered = np.stack([_spd_fractional(m, mid.alpha) for m in stacked])
        return squareform(pdist(powered.reshape(n, -1)))
    if mid.name == "spd_log_cholesky":
        reprs = np.stack([_log_cholesky_repr(m) for m in stacked])
        return squareform(pdist(reprs.reshape(n, -1)))
    if mid.name == "spd_airm" and stacked.shape[1] == 2:
        return _pairwise_airm_2x2(stacked)
    if mid.name == "wasserstein1d":
        return _pairwise_wasserstein(stacked)
    return _pairwise_loop(list(stacked), mid)
