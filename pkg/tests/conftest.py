import numpy as np
import pytest

from profassoc.core import DistanceMatrix, MetricObject, pairwise_matrix
from profassoc.metrics import MetricId, quantile_grid_points


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spd(rng, p=2, scale=0.6):
    s = rng.normal(0.0, scale, size=(p, p))
    sym = 0.5 * (s + s.T)
    w, v = np.linalg.eigh(sym)
    return (v * np.exp(w)) @ v.T


def spd_objects(rng, n, p=2):
    return [MetricObject("spd_matrix", random_spd(rng, p)) for _ in range(n)]


def gaussian_quantile_objects(rng, n, m=40):
    from scipy.special import ndtri

    u = ndtri(quantile_grid_points(m))
    mus = rng.normal(size=n)
    sigmas = rng.uniform(0.3, 2.0, size=n)
    return [MetricObject("quantile_grid", mu + sig * u) for mu, sig in zip(mus, sigmas)]


def scalar_matrix(rng, n):
    """Distance matrix of iid scalars under the absolute difference."""
    x = rng.normal(size=n)
    return DistanceMatrix(np.abs(x[:, None] - x[None, :]))


def random_matrix_pair(rng, n, kind="scalar"):
    """Distance-matrix pair for one of the supported object families."""
    if kind == "scalar":
        return scalar_matrix(rng, n), scalar_matrix(rng, n)
    if kind == "vector":
        x = rng.normal(size=(n, 3))
        y = rng.normal(size=(n, 3))
        return (
            pairwise_matrix([MetricObject("vector", row) for row in x], "euclidean"),
            pairwise_matrix([MetricObject("vector", row) for row in y], "euclidean"),
        )
    if kind.startswith("spd_"):
        metric = MetricId(kind, 0.5) if kind == "spd_power" else MetricId(kind)
        return (
            pairwise_matrix(spd_objects(rng, n), metric),
            pairwise_matrix(spd_objects(rng, n), metric),
        )
    if kind == "wasserstein1d":
        return (
            pairwise_matrix(gaussian_quantile_objects(rng, n), "wasserstein1d"),
            pairwise_matrix(gaussian_quantile_objects(rng, n), "wasserstein1d"),
        )
    raise ValueError(kind)
