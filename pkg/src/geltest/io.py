"""File formats: NPY/CSV features, label files, and JSON reports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from numpy.lib import format as npformat

from .moments import FeatureSet

_NPY_DTYPES = (np.dtype("<f4"), np.dtype("<f8"))


class FormatError(ValueError):
    pass


def read_npy(path) -> np.ndarray:
    """Read a version 1.0, C-order, little-endian float32/float64 2-D NPY file."""
    with open(path, "rb") as fh:
        try:
            version = npformat.read_magic(fh)
        except ValueError as exc:
            raise FormatError(f"{path}: not an NPY file ({exc})") from exc
        if version != (1, 0):
            raise FormatError(f"{path}: NPY version {version[0]}.{version[1]} unsupported, need 1.0")
        try:
            shape, fortran, dtype = npformat.read_array_header_1_0(fh)
        except ValueError as exc:
            raise FormatError(f"{path}: malformed NPY header ({exc})") from exc
        if fortran:
            raise FormatError(f"{path}: Fortran-ordered arrays are not accepted")
        if dtype not in _NPY_DTYPES:
            raise FormatError(f"{path}: dtype {dtype.str} unsupported, need <f4 or <f8")
        if len(shape) != 2:
            raise FormatError(f"{path}: expected a 2-D array, got shape {shape}")
        count = int(np.prod(shape))
        data = np.fromfile(fh, dtype=dtype, count=count)
        if data.size != count:
            raise FormatError(f"{path}: truncated data ({data.size} of {count} values)")
    return data.reshape(shape)


def write_npy(path, array) -> None:
    """Write a 2-D float array as NPY 1.0 (float64 unless already float32)."""
    arr = np.asarray(array)
    if arr.ndim != 2:
        raise ValueError("only 2-D arrays are written")
    dtype = np.dtype("<f4") if arr.dtype == np.float32 else np.dtype("<f8")
    arr = np.ascontiguousarray(arr, dtype=dtype)
    header = {"descr": dtype.str, "fortran_order": False, "shape": arr.shape}
    with open(path, "wb") as fh:
        npformat.write_array_header_1_0(fh, header)
        fh.write(arr.tobytes(order="C"))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path) -> np.ndarray:
    """One sample per line, comma separated; a non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise FormatError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FormatError(f"{path}: ragged rows")
    try:
        return np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def read_labels(path) -> np.ndarray:
    """One label per line; integers when every line parses as one."""
    with open(path) as fh:
        items = [line.strip() for line in fh if line.strip()]
    try:
        return np.array([int(x) for x in items])
    except ValueError:
        return np.array(items)


def load_matrix(path, fmt: Optional[str] = None) -> np.ndarray:
    fmt = fmt or Path(path).suffix.lstrip(".").lower()
    if fmt == "npy":
        return read_npy(path)
    if fmt in ("csv", "txt"):
        return read_csv(path)
    raise FormatError(f"{path}: unknown feature format {fmt!r}")


def load_features(path, fmt: Optional[str] = None, labels_path=None) -> FeatureSet:
    """Read a feature matrix (and optional labels file) into a FeatureSet."""
    X = load_matrix(path, fmt)
    labels = None
    if labels_path is not None:
        labels = read_labels(labels_path)
        if len(labels) != X.shape[0]:
            raise FormatError(f"{labels_path}: {len(labels)} labels for {X.shape[0]} samples")
    return FeatureSet(X, labels)


# -- reports ---------------------------------------------------------------

_FLOAT_KEYS = {
    "divergence_nats",
    "divergence_bits",
    "scores",
    "wilks",
    "hotelling_t2",
    "final_grad_norm",
    "distance_bound",
    "weight",
}


def encode_float(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return x


def decode_float(x):
    if isinstance(x, str):
        return {"nan": math.nan, "+inf": math.inf, "-inf": -math.inf}[x]
    return x


def _walk(obj, fn, key=None):
    if isinstance(obj, dict):
        # inside a numeric field ({"model": .., "data": ..}) keep the field's key
        return {k: _walk(v, fn, key if key in _FLOAT_KEYS else k) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_walk(v, fn, key) for v in obj]
    if key in _FLOAT_KEYS:
        return fn(obj)
    return obj


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return encode_float(obj)
    return obj


@dataclass
class Report:
    """Everything needed to interpret and re-run one test.

    ``weights`` maps a side name (``"data"``/``"model"``) to a list of
    ``{"id", "weight"}`` records; ``score`` is the display string
    (``"model/data"`` for two-sample runs).
    """

    test: str
    config: Dict[str, Any]
    status: str
    divergence_nats: Any = None
    divergence_bits: Any = None
    scores: Any = None
    score: str = ""
    wilks: Optional[float] = None
    hotelling_t2: Optional[float] = None
    iterations: Optional[int] = None
    final_grad_norm: Optional[float] = None
    hessian_rank: Optional[int] = None
    alpha: Optional[int] = None
    beta: Optional[int] = None
    weights: Optional[Dict[str, List[Dict[str, Any]]]] = None
    class_report: Optional[Dict[str, Any]] = None
    extra: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    tool_version: str = ""
    timing_seconds: float = 0.0

    def to_dict(self, include_timing: bool = True) -> dict:
        d = _walk(_plain(asdict(self)), encode_float)
        if not include_timing:
            d.pop("timing_seconds", None)
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls(**_walk(json.loads(text), decode_float))

    def write(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def read(cls, path) -> "Report":
        return cls.from_json(Path(path).read_text())

    def side_weights(self, side: str = "data"):
        if not self.weights or side not in self.weights:
            raise KeyError(f"report has no {side} weights")
        recs = self.weights[side]
        return [r["id"] for r in recs], np.array([r["weight"] for r in recs], dtype=float)


def weight_records(ids, weights) -> List[Dict[str, Any]]:
    return [{"id": _plain(i), "weight": float(w)} for i, w in zip(ids, weights)]
