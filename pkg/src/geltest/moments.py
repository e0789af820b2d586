"""Feature containers and moment-condition builders.

Every test in this package reduces to a moment matrix whose row ``i`` is
``m(x_i; c)``; a reweighting ``pi`` is acceptable when
``sum_i pi_i m(x_i; c) = 0``. The builders here produce that matrix for
mean, FID-style first/second moment, and kernel mean-embedding tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .kernels import KernelSpec, needs_labels

PAIRED = "paired"
VS_MODEL_MEAN = "vs-model-mean"


class DegenerateMomentsWarning(UserWarning):
    """Fewer samples than constraints + 1; the dual Hessian is likely singular."""


class RankDeficientWarning(UserWarning):
    pass


def _as_label_array(labels):
    if labels is None:
        return None
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    return arr


@dataclass(frozen=True)
class FeatureSet:
    """An ``n x d`` feature matrix with optional labels and stable ids."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    ids: Optional[np.ndarray] = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim == 1:
            feats = feats[:, None]
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ValueError(f"features must be a non-empty 2-D matrix, got shape {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features contain non-finite entries")
        labels = _as_label_array(self.labels)
        if labels is not None and len(labels) != feats.shape[0]:
            raise ValueError(f"{len(labels)} labels for {feats.shape[0]} samples")
        ids = np.arange(feats.shape[0]) if self.ids is None else np.asarray(self.ids)
        if ids.ndim != 1 or len(ids) != feats.shape[0]:
            raise ValueError("ids must have one entry per sample")
        if len(np.unique(ids)) != len(ids):
            raise ValueError("sample ids must be unique")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "FeatureSet":
        index = np.asarray(index)
        return FeatureSet(
            self.features[index],
            None if self.labels is None else self.labels[index],
            self.ids[index],
        )


@dataclass(frozen=True)
class WitnessSet:
    points: np.ndarray
    labels: Optional[np.ndarray] = None
    source_seed: int = 0

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] < 1:
            raise ValueError("need at least one witness point")
        labels = _as_label_array(self.labels)
        if labels is not None and len(labels) != pts.shape[0]:
            raise ValueError("witness labels must match witness count")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    @property
    def count(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class MomentMatrix:
    """Rows ``m(x_i; c)`` plus a record of how ``c`` was formed.

    ``provenance`` is one of ``"mean"``, ``"fid"``, ``"me-paired"``,
    ``"me-vs-model-mean"``, ``"user"``.
    """

    rows: np.ndarray
    provenance: str
    target_c: Optional[np.ndarray] = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError(f"moment matrix must be a non-empty 2-D array, got {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("moment matrix has non-finite entries")
        if rows.shape[0] < rows.shape[1] + 1:
            warnings.warn(
                f"{rows.shape[0]} samples for {rows.shape[1]} constraints; "
                "the dual Hessian is likely singular",
                DegenerateMomentsWarning,
                stacklevel=3,
            )
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]


def _check_dims(a: FeatureSet, b_dim: int, what: str):
    if a.d != b_dim:
        raise ValueError(f"dimension mismatch: features have d={a.d}, {what} has d={b_dim}")


def build_mean_moments(test: FeatureSet, model_mean) -> MomentMatrix:
    """Rows ``phi(x_i) - c`` for a mean test against ``c = model_mean``."""
    c = np.atleast_1d(np.asarray(model_mean, dtype=float))
    if c.ndim != 1:
        raise ValueError("model mean must be a vector")
    _check_dims(test, c.shape[0], "model mean")
    return MomentMatrix(test.features - c, "mean", target_c=c)


def fid_augment(features: np.ndarray) -> np.ndarray:
    """``[x, upper triangle of x x^T]`` per row, diagonal included."""
    x = np.asarray(features, dtype=float)
    iu, ju = np.triu_indices(x.shape[1])
    return np.hstack([x, x[:, iu] * x[:, ju]])


def build_fid_moments(test: FeatureSet, model: FeatureSet) -> MomentMatrix:
    """First and second moment matching, with ``c`` the model-side mean.

    Only the upper triangle of the outer product is kept; the lower
    triangle would duplicate constraints and make the dual singular.
    """
    _check_dims(test, model.d, "model")
    c = fid_augment(model.features).mean(axis=0)
    return MomentMatrix(fid_augment(test.features) - c, "fid", target_c=c)


def _labels_for(kernel, fs_labels, what):
    if needs_labels(kernel) and fs_labels is None:
        raise ValueError(f"kernel needs labels but {what} has none")
    return fs_labels


def embed(fs: FeatureSet, witnesses: WitnessSet, kernel: KernelSpec) -> np.ndarray:
    """Kernel evaluations ``[k(x_i, t_w)]_w`` for every sample, ``n x W``."""
    if fs.d != witnesses.points.shape[1]:
        raise ValueError(
            f"dimension mismatch: samples have d={fs.d}, witnesses d={witnesses.points.shape[1]}"
        )
    la = _labels_for(kernel, fs.labels, "sample set")
    lw = _labels_for(kernel, witnesses.labels, "witness set")
    return kernel.gram(fs.features, witnesses.points, la, lw)


def build_me_moments(
    test: FeatureSet,
    model: FeatureSet,
    witnesses: WitnessSet,
    kernel: KernelSpec,
    mode: str = VS_MODEL_MEAN,
) -> MomentMatrix:
    """Mean-embedding moments at the witness points.

    ``mode="paired"`` gives ``z_i = [k(x_i, t_w) - k(y_i, t_w)]_w`` with
    samples paired by index. ``mode="vs-model-mean"`` compares each test
    sample to the model's empirical mean embedding.
    """
    _check_dims(test, model.d, "model")
    kx = embed(test, witnesses, kernel)
    ky = embed(model, witnesses, kernel)
    if mode == PAIRED:
        if test.n != model.n:
            raise ValueError(f"paired moments need equal sizes, got {test.n} and {model.n}")
        return MomentMatrix(kx - ky, "me-paired")
    if mode == VS_MODEL_MEAN:
        c = ky.mean(axis=0)
        return MomentMatrix(kx - c, "me-vs-model-mean", target_c=c)
    raise ValueError(f"unknown mean-embedding mode {mode!r}")


def sample_witnesses(pool: FeatureSet, count: int, seed: int) -> WitnessSet:
    """Draw ``count`` witnesses from ``pool`` without replacement."""
    if not 1 <= count <= pool.n:
        raise ValueError(f"cannot draw {count} witnesses from a pool of {pool.n}")
    idx = np.random.default_rng(seed).choice(pool.n, size=count, replace=False)
    labels = None if pool.labels is None else pool.labels[idx]
    return WitnessSet(pool.features[idx].copy(), labels, source_seed=seed)


@dataclass(frozen=True)
class PcaTransform:
    mean: np.ndarray
    components: np.ndarray  # k x d, orthonormal rows
    singular_values: np.ndarray
    rank_deficient: bool = False

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.mean) @ self.components.T


def pca_preprocess(
    sets: Sequence[FeatureSet], rtol: Optional[float] = None
) -> Tuple[List[FeatureSet], PcaTransform]:
    """Center and rotate all sets onto the principal axes of their union.

    Directions whose singular value falls below ``rtol * s_max`` are
    dropped (default ``rtol = max(N, d) * eps``, the usual numerical-rank
    cutoff) and a :class:`RankDeficientWarning` is emitted.

    Mean and FID tests are invariant under this map. Kernel tests are
    not: centering changes the exponential kernel, so the rotated space
    is a different (usually better conditioned) feature map.
    """
    if not sets:
        raise ValueError("nothing to preprocess")
    d = sets[0].d
    for fs in sets:
        if fs.d != d:
            raise ValueError("all feature sets must share a dimension")
    stacked = np.vstack([fs.features for fs in sets])
    mean = stacked.mean(axis=0)
    _, s, vt = np.linalg.svd(stacked - mean, full_matrices=False)
    if rtol is None:
        rtol = max(stacked.shape) * np.finfo(float).eps
    keep = s > rtol * (s[0] if s.size else 0.0)
    if not np.any(keep):
        keep[:1] = True
    deficient = bool(keep.sum() < d)
    if deficient:
        warnings.warn(
            f"feature covariance has rank {int(keep.sum())} < d={d}; dropping null directions",
            RankDeficientWarning,
            stacklevel=2,
        )
    tf = PcaTransform(mean, vt[keep], s[keep], deficient)
    out = [FeatureSet(tf.apply(fs.features), fs.labels, fs.ids) for fs in sets]
    return out, tf


def wrap_user_moments(matrix) -> MomentMatrix:
    """Use a caller-computed moment matrix (score functions, custom conditions)."""
    rows = np.asarray(matrix, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    return MomentMatrix(rows, "user")
