"""Domain types, distance-matrix construction, and empirical distance profiles.

All statistics downstream consume data only through pairwise distances, so a
``DistanceMatrix`` is the sole interface between object spaces and the test
machinery; users may supply one directly instead of raw objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import metrics as _metrics
from .validation import (
    DataError,
    as_float_array,
    check_covariate,
    check_quantile_grid,
    check_spd,
    check_unit_vector,
    check_vector,
)

__all__ = [
    "TAGS",
    "MetricObject",
    "DistanceMatrix",
    "ProfileQuery",
    "PairedDataset",
    "as_metric_objects",
    "pairwise_matrix",
    "marginal_profile",
    "joint_profile",
]

TAGS = ("vector", "unit_vector", "spd_matrix", "quantile_grid")


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class MetricObject:
    """Tagged point of one of the supported object spaces.

    Payload shapes: ``vector``/``unit_vector`` length-p arrays, ``spd_matrix``
    p x p arrays, ``quantile_grid`` length-m nondecreasing arrays of quantile
    values at the interior probabilities (k - 1/2)/m.
    """

    tag: str
    payload: np.ndarray

    def __post_init__(self):
        if self.tag not in TAGS:
            raise DataError(f"unknown object tag {self.tag!r}; valid tags: {', '.join(TAGS)}")
        if self.tag == "vector":
            payload = check_vector(self.payload, "vector payload")
        elif self.tag == "unit_vector":
            payload = check_unit_vector(self.payload, tol=1e-9, name="unit_vector payload")
        elif self.tag == "spd_matrix":
            payload = check_spd(self.payload, "spd_matrix payload")
        else:
            payload = check_quantile_grid(self.payload, "quantile_grid payload")
        object.__setattr__(self, "payload", _freeze(payload))

    @property
    def dim(self) -> int:
        return self.payload.shape[0]


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative matrix of pairwise distances with zero diagonal.

    Construction symmetrizes within ``sym_tol`` and zeroes the diagonal, so the
    stored entries satisfy the invariants exactly.
    """

    entries: np.ndarray
    sym_tol: float = field(default=1e-8, repr=False, compare=False)

    def __post_init__(self):
        arr = as_float_array(self.entries, "distance matrix")
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise DataError(f"distance matrix must be square, got shape {arr.shape}")
        asym = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
        if asym > self.sym_tol:
            raise DataError(f"distance matrix asymmetric by {asym:.3e} (tolerance {self.sym_tol})")
        diag = float(np.max(np.abs(np.diag(arr))))
        if diag > self.sym_tol:
            raise DataError(f"distance matrix diagonal deviates from zero by {diag:.3e}")
        if float(arr.min()) < -self.sym_tol:
            raise DataError("distance matrix has negative entries")
        arr = 0.5 * (arr + arr.T)
        np.fill_diagonal(arr, 0.0)
        np.clip(arr, 0.0, None, out=arr)
        object.__setattr__(self, "entries", _freeze(arr))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def submatrix(self, idx) -> "DistanceMatrix":
        idx = np.asarray(idx, dtype=int)
        return DistanceMatrix(self.entries[np.ix_(idx, idx)])


@dataclass(frozen=True)
class ProfileQuery:
    """Anchor index and radius at which a distance profile is evaluated."""

    anchor_index: int
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise DataError(f"radius must be nonnegative, got {self.radius}")


def as_metric_objects(data, tag: str) -> list[MetricObject]:
    """Coerce a stacked array or sequence of payloads into tagged objects."""
    if isinstance(data, DistanceMatrix):
        raise DataError("expected object payloads, got a DistanceMatrix")
    if isinstance(data, np.ndarray):
        if tag == "spd_matrix":
            if data.ndim != 3:
                raise DataError(f"spd_matrix sample must be a (n, p, p) array, got shape {data.shape}")
        elif data.ndim == 1:
            data = data[:, None] if tag == "vector" else data
        items = list(data)
    else:
        items = list(data)
    out = []
    for i, item in enumerate(items):
        if isinstance(item, MetricObject):
            if item.tag != tag:
                raise DataError(f"object {i} has tag {item.tag!r}, expected {tag!r}")
            out.append(item)
        else:
            out.append(MetricObject(tag, np.asarray(item, dtype=float)))
    if not out:
        raise DataError("empty object sample")
    return out


@dataclass(frozen=True)
class PairedDataset:
    """Aligned samples of two object columns, optionally with a scalar covariate.

    Columns are lists of ``MetricObject`` or precomputed ``DistanceMatrix``;
    attached metric identifiers make the dataset self-describing for the
    statistics modules (explicit metric arguments override them).
    """

    x_objects: object
    y_objects: object
    z: np.ndarray | None = None
    metric_x: _metrics.MetricId | None = None
    metric_y: _metrics.MetricId | None = None

    def __post_init__(self):
        nx = self._column_len(self.x_objects, "x")
        ny = self._column_len(self.y_objects, "y")
        if nx != ny:
            raise DataError(f"column lengths differ: x has {nx}, y has {ny}")
        if self.z is not None:
            z = check_covariate(self.z)
            if z.shape[0] != nx:
                raise DataError(f"z has {z.shape[0]} values for {nx} samples")
            object.__setattr__(self, "z", _freeze(z))
        for attr in ("metric_x", "metric_y"):
            val = getattr(self, attr)
            if val is not None:
                object.__setattr__(self, attr, _metrics.resolve_metric(val))

    @staticmethod
    def _column_len(col, name: str) -> int:
        if isinstance(col, DistanceMatrix):
            return col.n
        try:
            n = len(col)
        except TypeError:
            raise DataError(f"{name} column must be a list of MetricObject or a DistanceMatrix") from None
        if n == 0:
            raise DataError(f"{name} column is empty")
        for i, item in enumerate(col):
            if not isinstance(item, MetricObject):
                raise DataError(f"{name} column item {i} is not a MetricObject")
        tags = {item.tag for item in col}
        if len(tags) > 1:
            raise DataError(f"{name} column mixes object tags {sorted(tags)}")
        return n

    @property
    def n(self) -> int:
        return self._column_len(self.x_objects, "x")

    @property
    def has_z(self) -> bool:
        return self.z is not None

    def distance_matrix_x(self, metric=None) -> DistanceMatrix:
        return self._matrix(self.x_objects, metric if metric is not None else self.metric_x, "x")

    def distance_matrix_y(self, metric=None) -> DistanceMatrix:
        return self._matrix(self.y_objects, metric if metric is not None else self.metric_y, "y")

    @staticmethod
    def _matrix(col, metric, name: str) -> DistanceMatrix:
        if isinstance(col, DistanceMatrix):
            return col
        if metric is None:
            raise DataError(f"no metric given for the {name} column and none attached to the dataset")
        return pairwise_matrix(col, metric)

    def subset(self, idx_x, idx_yz=None) -> "PairedDataset":
        """Row subset; separate index lists realign x against (y, z)."""
        idx_x = np.asarray(idx_x, dtype=int)
        idx_yz = idx_x if idx_yz is None else np.asarray(idx_yz, dtype=int)
        if idx_x.shape != idx_yz.shape:
            raise DataError("index lists must have equal length")
        return PairedDataset(
            self._take(self.x_objects, idx_x),
            self._take(self.y_objects, idx_yz),
            z=None if self.z is None else self.z[idx_yz],
            metric_x=self.metric_x,
            metric_y=self.metric_y,
        )

    @staticmethod
    def _take(col, idx):
        if isinstance(col, DistanceMatrix):
            return col.submatrix(idx)
        return [col[i] for i in idx]


def pairwise_matrix(objects, metric) -> DistanceMatrix:
    """Distance matrix of a homogeneous object sample under the given metric.

    Deterministic; each unordered pair is evaluated once, so the result is
    symmetric by construction with an exactly zero diagonal.
    """
    mid = _metrics.resolve_metric(metric)
    expected = _metrics.tag_for_metric(mid)
    if isinstance(objects, np.ndarray):
        objects = as_metric_objects(objects, expected)
    objects = list(objects)
    if not objects:
        raise DataError("empty object sample")
    if not all(isinstance(obj, MetricObject) for obj in objects):
        raise DataError("objects must all be MetricObject instances")
    tags = {obj.tag for obj in objects}
    if len(tags) > 1:
        raise DataError(f"objects mix tags {sorted(tags)}")
    tag = objects[0].tag
    if tag != expected:
        raise DataError(f"metric {mid.name!r} expects tag {expected!r}, got {tag!r}")
    dims = {obj.dim for obj in objects}
    if len(dims) > 1:
        raise DataError(f"objects mix dimensions {sorted(dims)}")
    payloads = np.stack([obj.payload for obj in objects])
    return DistanceMatrix(_metrics.pairwise_distances(payloads, mid))


def marginal_profile(d: DistanceMatrix, q: ProfileQuery) -> float:
    """Empirical marginal distance profile: fraction of the sample within
    ``q.radius`` of the anchor (the anchor itself is counted)."""
    if not 0 <= q.anchor_index < d.n:
        raise DataError(f"anchor index {q.anchor_index} out of range for n={d.n}")
    row = d.entries[q.anchor_index]
    return float(np.count_nonzero(row <= q.radius)) / d.n


def joint_profile(dx: DistanceMatrix, dy: DistanceMatrix, anchor: int, u: float, v: float) -> float:
    """Empirical joint distance profile at a common anchor pair."""
    if dx.n != dy.n:
        raise DataError(f"distance matrices differ in size: {dx.n} vs {dy.n}")
    if not 0 <= anchor < dx.n:
        raise DataError(f"anchor index {anchor} out of range for n={dx.n}")
    if u < 0 or v < 0:
        raise DataError("radii must be nonnegative")
    hits = (dx.entries[anchor] <= u) & (dy.entries[anchor] <= v)
    return float(np.count_nonzero(hits)) / dx.n
