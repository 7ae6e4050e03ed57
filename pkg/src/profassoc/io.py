"""File formats and deterministic serialization for the command-line interface.

Formats (all CSV):
  vectors        one row per sample, numeric columns (optional header)
  spd            first column p, then the p*p row-major entries per row
  quantile grids one row per sample with a header row q1..qm
  distances      n x n numeric matrix, symmetry validated at 1e-8
  covariate      single numeric column (optional header)

Floats are serialized with 17 significant digits so that rereads round-trip
exactly and reports are byte-stable.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

from .core import DistanceMatrix
from .validation import DataError

__all__ = [
    "format_float",
    "dump_json",
    "read_vectors_csv",
    "write_vectors_csv",
    "read_quantile_csv",
    "write_quantile_csv",
    "read_spd_csv",
    "write_spd_csv",
    "read_distance_csv",
    "write_distance_csv",
    "read_covariate_csv",
    "write_covariate_csv",
    "file_fingerprint",
]


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _json_fragment(obj, out: list):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.append('"nan"' if math.isnan(x) else format_float(x))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, val) in enumerate(obj.items()):
            if i:
                out.append(",")
            _json_fragment(str(key), out)
            out.append(":")
            _json_fragment(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, val in enumerate(obj):
            if i:
                out.append(",")
            _json_fragment(val, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_json(obj) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    out: list = []
    _json_fragment(obj, out)
    return "".join(out)


def _read_rows(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(lines, start=1):
        if line.strip():
            rows.append((lineno, [cell.strip() for cell in line.split(",")]))
    if not rows:
        raise DataError(f"{path}: file is empty")
    return rows


def _parse_numeric(path: str, rows, skip_header_if_text=True):
    start = 0
    if skip_header_if_text:
        try:
            [float(c) for c in rows[0][1]]
        except ValueError:
            start = 1
            if len(rows) == 1:
                raise DataError(f"{path}: no data rows after header") from None
    width = len(rows[start][1])
    parsed = []
    for lineno, cells in rows[start:]:
        if len(cells) != width:
            raise DataError(f"{path}:{lineno}: expected {width} columns, found {len(cells)}")
        try:
            parsed.append([float(c) for c in cells])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric value ({exc})") from None
    arr = np.asarray(parsed, dtype=float)
    if not np.all(np.isfinite(arr)):
        bad = int(np.nonzero(~np.isfinite(arr).all(axis=1))[0][0])
        raise DataError(f"{path}:{rows[start + bad][0]}: non-finite value")
    return arr


def read_vectors_csv(path: str) -> np.ndarray:
    """(n, p) array of sample vectors; a non-numeric first row is a header."""
    return _parse_numeric(path, _read_rows(path))


def write_vectors_csv(path: str, arr) -> None:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    lines = [",".join(format_float(v) for v in row) for row in arr]
    _write_lines(path, lines)


def read_quantile_csv(path: str) -> np.ndarray:
    """(n, m) array of quantile grids; the header row (q1..qm) is mandatory."""
    rows = _read_rows(path)
    try:
        [float(c) for c in rows[0][1]]
    except ValueError:
        return _parse_numeric(path, rows)
    raise DataError(f"{path}:1: quantile-grid files need a header row (q1..qm)")


def write_quantile_csv(path: str, arr) -> None:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    header = ",".join(f"q{i + 1}" for i in range(arr.shape[1]))
    lines = [header] + [",".join(format_float(v) for v in row) for row in arr]
    _write_lines(path, lines)


def read_spd_csv(path: str) -> np.ndarray:
    """(n, p, p) array; each row holds p followed by p*p row-major entries."""
    arr = _parse_numeric(path, _read_rows(path))
    p = arr[0, 0]
    if p != int(p) or int(p) < 1:
        raise DataError(f"{path}: first column must be the matrix dimension")
    p = int(p)
    if arr.shape[1] != 1 + p * p:
        raise DataError(f"{path}: rows must have 1 + p*p = {1 + p * p} columns, found {arr.shape[1]}")
    if np.any(arr[:, 0] != p):
        bad = int(np.nonzero(arr[:, 0] != p)[0][0])
        raise DataError(f"{path}: inconsistent dimension at data row {bad + 1}")
    return arr[:, 1:].reshape(-1, p, p)


def write_spd_csv(path: str, mats) -> None:
    mats = np.asarray(mats, dtype=float)
    p = mats.shape[1]
    lines = [
        ",".join([str(p)] + [format_float(v) for v in mat.reshape(-1)]) for mat in mats
    ]
    _write_lines(path, lines)


def read_distance_csv(path: str) -> DistanceMatrix:
    arr = _parse_numeric(path, _read_rows(path))
    if arr.shape[0] != arr.shape[1]:
        raise DataError(f"{path}: distance matrix must be square, got {arr.shape[0]}x{arr.shape[1]}")
    return DistanceMatrix(arr)


def write_distance_csv(path: str, d: DistanceMatrix) -> None:
    lines = [",".join(format_float(v) for v in row) for row in d.entries]
    _write_lines(path, lines)


def read_covariate_csv(path: str) -> np.ndarray:
    arr = _parse_numeric(path, _read_rows(path))
    if arr.shape[1] != 1:
        raise DataError(f"{path}: covariate files have a single column, found {arr.shape[1]}")
    return arr[:, 0]


def write_covariate_csv(path: str, values) -> None:
    values = np.asarray(values, dtype=float)
    _write_lines(path, [format_float(v) for v in values])


def _write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def file_fingerprint(path: str, rows: int) -> dict:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return {"path": path, "sha256": digest.hexdigest(), "rows": rows}
