import math

import numpy as np
import pytest
from scipy.special import ndtri

from profassoc.metrics import (
    MetricId,
    euclidean,
    metric_function,
    pairwise_distances,
    quantile_grid_points,
    resolve_metric,
    spd_airm,
    spd_bures_wasserstein,
    spd_frobenius,
    spd_geodesic_interp,
    spd_log_cholesky,
    spd_power,
    sphere_geodesic,
    wasserstein1d,
    _pairwise_loop,
)
from profassoc.validation import DataError

from conftest import random_spd


def gaussian_grid(mu, sigma, m=1000):
    return mu + sigma * ndtri(quantile_grid_points(m))


class TestEuclidean:
    def test_identity(self):
        assert euclidean([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_3_4_5(self):
        assert euclidean([0.0, 0.0], [3.0, 4.0]) == 5.0

    def test_matches_coordinate_loop(self, rng):
        u = rng.normal(size=10)
        v = rng.normal(size=10)
        direct = math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v)))
        assert euclidean(u, v) == pytest.approx(direct, rel=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            euclidean([1.0], [1.0, 2.0])


class TestSphereGeodesic:
    def test_identity(self):
        u = np.array([1.0, 0.0, 0.0])
        assert sphere_geodesic(u, u) == 0.0

    def test_antipodal(self):
        u = np.array([0.0, 1.0, 0.0])
        assert sphere_geodesic(u, -u) == pytest.approx(math.pi)

    def test_orthogonal(self):
        assert sphere_geodesic([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]) == pytest.approx(math.pi / 2)

    def test_non_unit_rejected(self):
        with pytest.raises(DataError):
            sphere_geodesic([1.0, 1.0, 0.0], [1.0, 0.0, 0.0])


class TestSpdMetrics:
    def test_frobenius_identity_and_diagonal(self):
        eye = np.eye(2)
        assert spd_frobenius(eye, eye) == 0.0
        assert spd_frobenius(eye, 2 * eye) == pytest.approx(math.sqrt(2.0))

    def test_frobenius_matches_entrywise_loop(self, rng):
        a = random_spd(rng)
        b = random_spd(rng)
        direct = math.sqrt(sum((a[i, j] - b[i, j]) ** 2 for i in range(2) for j in range(2)))
        assert spd_frobenius(a, b) == pytest.approx(direct, rel=1e-14)

    def test_airm_diagonal_case(self):
        # log of diag(e, e) whitened by I is the identity
        assert spd_airm(np.eye(2), np.diag([math.e, math.e])) == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_airm_affine_invariance(self, rng):
        for _ in range(10):
            a = random_spd(rng)
            b = random_spd(rng)
            c = rng.normal(size=(2, 2)) + 2.0 * np.eye(2)
            assert spd_airm(c @ a @ c.T, c @ b @ c.T) == pytest.approx(spd_airm(a, b), abs=1e-8)

    def test_log_cholesky_diagonal_case(self):
        assert spd_log_cholesky(np.eye(2), np.diag([math.e**2, 1.0])) == pytest.approx(1.0, rel=1e-12)

    def test_log_cholesky_matches_composed_formula(self, rng):
        a = random_spd(rng, p=3)
        b = random_spd(rng, p=3)
        la = np.linalg.cholesky(a)
        lb = np.linalg.cholesky(b)
        off = np.sum((np.tril(la, -1) - np.tril(lb, -1)) ** 2)
        diag = np.sum((np.log(np.diag(la)) - np.log(np.diag(lb))) ** 2)
        assert spd_log_cholesky(a, b) == pytest.approx(math.sqrt(off + diag), rel=1e-12)

    def test_power_alpha_one_is_frobenius(self, rng):
        for _ in range(10):
            a = random_spd(rng)
            b = random_spd(rng)
            assert spd_power(a, b, 1.0) == pytest.approx(spd_frobenius(a, b), abs=1e-12)

    def test_power_half_diagonal(self):
        assert spd_power(4 * np.eye(2), np.eye(2), 0.5) == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_power_matches_eigen_oracle(self, rng):
        a = random_spd(rng)
        b = random_spd(rng)
        wa, va = np.linalg.eigh(a)
        wb, vb = np.linalg.eigh(b)
        pa = va @ np.diag(wa ** (1 / 3)) @ va.T
        pb = vb @ np.diag(wb ** (1 / 3)) @ vb.T
        assert spd_power(a, b, 1 / 3) == pytest.approx(np.linalg.norm(pa - pb, "fro"), rel=1e-10)

    def test_bures_identity_and_commuting(self):
        a = np.diag([4.0, 1.0])
        b = np.diag([1.0, 1.0])
        assert spd_bures_wasserstein(a, a) == pytest.approx(0.0, abs=1e-8)
        assert spd_bures_wasserstein(a, b) == pytest.approx(1.0, rel=1e-10)

    def test_bures_matches_naive_formula(self, rng):
        a = random_spd(rng)
        b = random_spd(rng)
        wa, va = np.linalg.eigh(a)
        ra = va @ np.diag(np.sqrt(wa)) @ va.T
        inner = ra @ b @ ra
        wi, vi = np.linalg.eigh(0.5 * (inner + inner.T))
        ri = vi @ np.diag(np.sqrt(np.maximum(wi, 0))) @ vi.T
        naive = math.sqrt(max(np.trace(a) + np.trace(b) - 2 * np.trace(ri), 0.0))
        assert spd_bures_wasserstein(a, b) == pytest.approx(naive, rel=1e-10)

    def test_non_spd_rejected(self):
        indefinite = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(DataError):
            spd_frobenius(indefinite, np.eye(2))


class TestWasserstein:
    def test_identity(self, rng):
        q = gaussian_grid(0.3, 1.2)
        assert wasserstein1d(q, q) == 0.0

    def test_location_shift(self):
        qx = gaussian_grid(0.0, 1.0)
        qy = gaussian_grid(1.0, 1.0)
        assert wasserstein1d(qx, qy) == pytest.approx(1.0, abs=1e-3)

    def test_gaussian_closed_form(self):
        qx = gaussian_grid(0.0, 1.0)
        qy = gaussian_grid(1.0, 2.0)
        assert wasserstein1d(qx, qy) == pytest.approx(math.sqrt(2.0), abs=5e-3)

    def test_translation_invariance(self, rng):
        qx = gaussian_grid(0.0, 1.0, m=200)
        qy = gaussian_grid(0.5, 1.7, m=200)
        d0 = wasserstein1d(qx, qy)
        assert wasserstein1d(qx + 3.3, qy + 3.3) == pytest.approx(d0, rel=1e-12)

    def test_translating_one_grid_of_an_equal_pair(self):
        q = gaussian_grid(0.0, 1.0, m=500)
        c = 0.7
        assert wasserstein1d(q, q + c) == pytest.approx(c, abs=2e-3)

    def test_grid_mismatch(self):
        with pytest.raises(DataError):
            wasserstein1d(np.array([0.0, 1.0]), np.array([0.0, 1.0, 2.0]))

    def test_decreasing_grid_rejected(self):
        with pytest.raises(DataError):
            wasserstein1d(np.array([1.0, 0.0]), np.array([0.0, 1.0]))


class TestGeodesicInterp:
    def test_endpoints(self, rng):
        a = random_spd(rng)
        b = random_spd(rng)
        assert np.array_equal(spd_geodesic_interp(a, b, 0.0), a)
        assert np.allclose(spd_geodesic_interp(a, b, 1.0), b, atol=1e-9)

    def test_midpoint_from_identity(self, rng):
        b = random_spd(rng)
        w, v = np.linalg.eigh(b)
        expected = v @ np.diag(np.sqrt(w)) @ v.T
        assert np.allclose(spd_geodesic_interp(np.eye(2), b, 0.5), expected, atol=1e-10)

    def test_out_of_range_rho(self, rng):
        a = random_spd(rng)
        with pytest.raises(DataError):
            spd_geodesic_interp(a, a, 1.5)


METRIC_CASES = [
    ("euclidean", None),
    ("sphere_geodesic", None),
    ("spd_frobenius", None),
    ("spd_airm", None),
    ("spd_log_cholesky", None),
    ("spd_power", 0.5),
    ("spd_bures_wasserstein", None),
    ("wasserstein1d", None),
]


def _sample(rng, name):
    if name == "euclidean":
        return rng.normal(size=4)
    if name == "sphere_geodesic":
        v = rng.normal(size=3)
        return v / np.linalg.norm(v)
    if name == "wasserstein1d":
        return gaussian_grid(rng.normal(), rng.uniform(0.5, 2.0), m=60)
    return random_spd(rng)


class TestMetricAxioms:
    @pytest.mark.parametrize("name,alpha", METRIC_CASES)
    def test_symmetry_identity_triangle(self, name, alpha):
        rng = np.random.default_rng(abs(hash(name)) % 2**32)
        fn = metric_function(name, alpha)
        # the outer square root in the Bures distance amplifies cancellation
        # error near zero, so d(a, a) cannot beat ~sqrt(eps) there
        identity_tol = 2e-7 if name == "spd_bures_wasserstein" else 1e-10
        for _ in range(8):
            a, b, c = (_sample(rng, name) for _ in range(3))
            dab = fn(a, b)
            assert dab >= 0.0
            assert fn(a, a) == pytest.approx(0.0, abs=identity_tol)
            assert fn(b, a) == pytest.approx(dab, abs=1e-10)
            assert dab <= fn(a, c) + fn(c, b) + 1e-8


class TestPairwiseFastPaths:
    @pytest.mark.parametrize("name,alpha", METRIC_CASES)
    def test_fast_path_matches_scalar_loop(self, name, alpha):
        rng = np.random.default_rng(abs(hash((name, "pairwise"))) % 2**32)
        payloads = np.stack([_sample(rng, name) for _ in range(8)])
        mid = resolve_metric(name, alpha)
        fast = pairwise_distances(payloads, mid)
        slow = _pairwise_loop(list(payloads), mid)
        assert np.allclose(fast, slow, atol=1e-10)
        assert np.array_equal(fast, fast.T)
        assert np.all(np.diag(fast) == 0.0)


class TestMetricId:
    def test_power_requires_alpha(self):
        with pytest.raises(DataError):
            MetricId("spd_power")

    def test_alpha_range(self):
        with pytest.raises(DataError):
            MetricId("spd_power", 1.5)

    def test_alpha_only_for_power(self):
        with pytest.raises(DataError):
            MetricId("euclidean", 0.5)

    def test_unknown_name(self):
        with pytest.raises(DataError):
            MetricId("manhattan")
