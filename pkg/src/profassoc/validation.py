"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

__all__ = [
    "DataError",
    "NumericalError",
    "as_float_array",
    "check_vector",
    "check_unit_vector",
    "check_spd",
    "check_quantile_grid",
    "check_covariate",
]


class DataError(ValueError):
    """Input data violate a documented contract (shape, range, structure)."""


class NumericalError(RuntimeError):
    """A numerical routine failed (decomposition breakdown, non-finite result)."""


def as_float_array(a, name: str = "array") -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.size and not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


def check_vector(u, name: str = "vector") -> np.ndarray:
    arr = as_float_array(u, name)
    if arr.ndim != 1 or arr.size == 0:
        raise DataError(f"{name} must be a nonempty 1-d array, got shape {arr.shape}")
    return arr


def check_unit_vector(u, tol: float = 1e-9, name: str = "unit vector") -> np.ndarray:
    arr = check_vector(u, name)
    nrm = float(np.linalg.norm(arr))
    if abs(nrm - 1.0) > tol:
        raise DataError(f"{name} must have Euclidean norm 1 (got {nrm!r}, tolerance {tol})")
    return arr


def check_spd(a, name: str = "matrix", sym_tol: float = 1e-9, eig_rel_tol: float = 1e-10) -> np.ndarray:
    """Validate a symmetric positive definite matrix.

    Symmetry is required within ``sym_tol``; the smallest eigenvalue must
    exceed ``eig_rel_tol`` times the largest (near-singular matrices, e.g.
    correlation matrices estimated from short series, are rejected).
    """
    arr = as_float_array(a, name)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DataError(f"{name} must be a square 2-d array, got shape {arr.shape}")
    if float(np.max(np.abs(arr - arr.T))) > sym_tol:
        raise DataError(f"{name} is not symmetric within tolerance {sym_tol}")
    try:
        eigvals = np.linalg.eigvalsh(0.5 * (arr + arr.T))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigvalsh rarely fails
        raise NumericalError(f"eigendecomposition of {name} failed: {exc}") from exc
    if eigvals[0] <= eig_rel_tol * max(eigvals[-1], np.finfo(float).tiny):
        raise DataError(
            f"{name} is not positive definite (eigenvalue range [{eigvals[0]:.3e}, {eigvals[-1]:.3e}])"
        )
    return arr


def check_quantile_grid(q, name: str = "quantile grid", atol: float = 1e-8) -> np.ndarray:
    arr = check_vector(q, name)
    if arr.size >= 2 and np.any(np.diff(arr) < -atol * max(1.0, float(np.max(np.abs(arr))))):
        raise DataError(f"{name} must be nondecreasing")
    return arr


def check_covariate(z, name: str = "z") -> np.ndarray:
    """Validate a scalar covariate column. Multivariate covariates are rejected."""
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DataError(
            f"{name} must be a scalar covariate column; multivariate covariates are not "
            "supported (a single-index extension is out of scope)"
        )
    if arr.size and not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr
