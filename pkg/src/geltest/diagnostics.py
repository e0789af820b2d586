"""Turn per-sample weights into mode, ranking and label-noise diagnostics.

Also holds the synthetic fixtures used to validate those diagnostics: a
Gaussian mixture with modes on the coordinate axes, and a block
construction in which dropped-mode points are orthogonal to everything
the model produces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .moments import FeatureSet
from .solvers import ZERO_WEIGHT


@dataclass(frozen=True)
class ClassReport:
    classes: Tuple
    class_mass: Dict
    rescaled: Dict
    oracle: Optional[np.ndarray] = None
    hellinger_to_oracle: Optional[float] = None

    def mass_vector(self) -> np.ndarray:
        return np.array([self.class_mass[c] for c in self.classes])

    def to_json(self) -> dict:
        return {
            "classes": [_plain(c) for c in self.classes],
            "class_mass": [float(self.class_mass[c]) for c in self.classes],
            "rescaled": [float(self.rescaled[c]) for c in self.classes],
            "oracle": None if self.oracle is None else [float(v) for v in self.oracle],
            "hellinger_to_oracle": self.hellinger_to_oracle,
        }


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def aggregate_class_weights(
    weights,
    labels,
    rescale_present_count: Optional[int] = None,
    oracle: Optional[Mapping] = None,
    classes: Optional[Sequence] = None,
) -> ClassReport:
    """Sum sample weights per class.

    ``rescaled`` multiplies each class mass by ``rescale_present_count``
    (the number of modes the model is known to cover) or, by default, by
    the number of classes, so a perfectly recovered present mode shows 1.
    ``oracle`` maps class -> true probability; when given, the Hellinger
    distance between oracle and class masses is filled in.
    """
    w = np.asarray(weights, dtype=float)
    lab = np.asarray(labels)
    if w.shape[0] != lab.shape[0]:
        raise ValueError(f"{w.shape[0]} weights for {lab.shape[0]} labels")
    if classes is None:
        classes = tuple(_plain(c) for c in np.unique(lab))
    else:
        classes = tuple(classes)
    mass = {c: float(w[lab == c].sum()) for c in classes}
    factor = len(classes) if rescale_present_count is None else rescale_present_count
    rescaled = {c: mass[c] * factor for c in classes}
    orc = None
    h = None
    if oracle is not None:
        orc = np.array([oracle.get(c, 0.0) for c in classes], dtype=float)
        h = hellinger_distance(orc, np.clip([mass[c] for c in classes], 0.0, None))
    return ClassReport(classes, mass, rescaled, orc, h)


def hellinger_distance(p, q) -> float:
    """``sqrt(1 - sum sqrt(p_i q_i))`` after renormalising both inputs."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("probability vectors must be non-negative")
    if p.sum() <= 0 or q.sum() <= 0:
        raise ValueError("probability vectors must have positive mass")
    p = p / p.sum()
    q = q / q.sum()
    bc = float(np.sum(np.sqrt(p * q)))
    return float(np.sqrt(min(max(1.0 - bc, 0.0), 1.0)))


def oracle_mode_distribution(
    classes: Sequence,
    dropped: Sequence = (),
    groups: Optional[Sequence[Tuple[Sequence, float]]] = None,
) -> np.ndarray:
    """True mode probabilities for a controlled experiment.

    With ``groups``, each ``(members, total)`` pair spreads ``total``
    uniformly over its members; otherwise classes in ``dropped`` get zero
    and the rest share the mass equally.
    """
    classes = list(classes)
    probs = np.zeros(len(classes))
    index = {c: i for i, c in enumerate(classes)}
    if groups is not None:
        for members, total in groups:
            for c in members:
                probs[index[c]] = total / len(members)
        if probs.sum() <= 0:
            raise ValueError("all classes dropped")
        return probs / probs.sum()
    present = [c for c in classes if c not in set(dropped)]
    if not present:
        raise ValueError("all classes dropped")
    for c in present:
        probs[index[c]] = 1.0 / len(present)
    return probs


def rank_samples(weights, ids) -> List[Tuple[object, float]]:
    """``(id, weight)`` pairs by ascending weight, ties by ascending id."""
    w = np.asarray(weights, dtype=float)
    ids = list(ids)
    if len(ids) != w.shape[0]:
        raise ValueError("weights and ids differ in length")
    return sorted(((_plain(i), float(x)) for i, x in zip(ids, w)), key=lambda t: (t[1], t[0]))


def bottom_k(weights, ids, k: int):
    if k > len(ids):
        raise ValueError(f"asked for the bottom {k} of {len(ids)} samples")
    return rank_samples(weights, ids)[:k]


def zero_weight_ids(weights, ids) -> list:
    return [i for i, w in rank_samples(weights, ids) if w <= ZERO_WEIGHT]


@dataclass(frozen=True)
class PrCurve:
    points: Tuple[Tuple[float, float], ...]  # (precision, recall)
    thresholds: Tuple[float, ...]
    auc: float


def pr_curve_from_weights(weights, corrupted) -> PrCurve:
    """Precision/recall of "low weight means corrupted" over all thresholds.

    At threshold ``t`` every sample with weight ``<= t`` is flagged. The
    area is the trapezoid rule over recall, starting from recall 0 at the
    precision of the smallest threshold.
    """
    w = np.asarray(weights, dtype=float)
    y = np.asarray(corrupted, dtype=bool)
    if w.shape != y.shape:
        raise ValueError("weights and flags differ in length")
    positives = int(y.sum())
    if positives == 0 or positives == len(y):
        raise ValueError("need at least one corrupted and one clean sample")
    order = np.argsort(w, kind="stable")
    ws, ys = w[order], y[order]
    tp = np.cumsum(ys)
    flagged = np.arange(1, len(w) + 1)
    # last index of each run of equal weights
    ends = np.flatnonzero(np.r_[ws[1:] != ws[:-1], True])
    precision = tp[ends] / flagged[ends]
    recall = tp[ends] / positives
    r = np.r_[0.0, recall]
    pr = np.r_[precision[0], precision]
    auc = float(np.sum(np.diff(r) * 0.5 * (pr[1:] + pr[:-1])))
    points = tuple(zip(precision.tolist(), recall.tolist()))
    return PrCurve(points, tuple(ws[ends].tolist()), auc)


def gen_gaussian_mixture(
    num_modes: int,
    separation: float,
    per_mode_counts: Sequence[int],
    dim: int,
    seed: int,
    id_prefix: str = "",
) -> FeatureSet:
    """Unit-covariance Gaussian modes centred at ``s * (e_k + 1)``.

    The ``+ s * 1`` shift keeps samples in the non-negative orthant with
    overwhelming probability for ``s`` around 10.
    """
    if num_modes > dim:
        raise ValueError(f"{num_modes} modes need dim >= {num_modes}, got {dim}")
    counts = list(per_mode_counts)
    if len(counts) != num_modes or any(c < 0 for c in counts):
        raise ValueError("need one non-negative count per mode")
    rng = np.random.default_rng(seed)
    feats, labels = [], []
    for k, c in enumerate(counts):
        mu = np.full(dim, float(separation))
        mu[k] += separation
        feats.append(mu + rng.standard_normal((c, dim)))
        labels.append(np.full(c, k))
    X = np.vstack(feats) if feats else np.zeros((0, dim))
    ids = np.array([f"{id_prefix}{i}" for i in range(X.shape[0])]) if id_prefix else None
    return FeatureSet(X, np.concatenate(labels), ids)


def mixture_means(num_modes: int, separation: float, dim: int) -> np.ndarray:
    mus = np.full((num_modes, dim), float(separation))
    mus[np.arange(num_modes), np.arange(num_modes)] += separation
    return mus


def gen_disjoint_block_fixture(
    kept_modes: int,
    dropped_modes: int,
    per_mode: int,
    model_per_mode: int,
    seed: int,
    separation: float = 10.0,
    noise: float = 1.0,
):
    """Test/model features where dropped modes live on their own coordinates.

    Kept modes (shared by test set and model) occupy the first
    ``kept_modes`` coordinates; each dropped mode occupies one extra
    coordinate that is zero for every kept-mode and model point. Dropped
    points are strictly positive there, so their convex hull misses the
    span of the model features. Returns ``(test, model, dropped_mask)``.
    """
    rng = np.random.default_rng(seed)
    d = kept_modes + dropped_modes

    def kept(count):
        out, lab = [], []
        for k in range(kept_modes):
            x = np.zeros((count, d))
            x[:, :kept_modes] = separation + noise * rng.standard_normal((count, kept_modes))
            x[:, k] += separation
            out.append(np.abs(x))
            lab.append(np.full(count, k))
        return np.vstack(out), np.concatenate(lab)

    test_kept, lab_kept = kept(per_mode)
    model_x, model_lab = kept(model_per_mode)
    dropped = []
    for j in range(dropped_modes):
        x = np.zeros((per_mode, d))
        x[:, kept_modes + j] = separation + np.abs(noise * rng.standard_normal(per_mode))
        dropped.append(x)
    test_x = np.vstack([test_kept] + dropped)
    test_lab = np.concatenate(
        [lab_kept] + [np.full(per_mode, kept_modes + j) for j in range(dropped_modes)]
    )
    mask = np.r_[np.zeros(len(test_kept), bool), np.ones(per_mode * dropped_modes, bool)]
    return FeatureSet(test_x, test_lab), FeatureSet(model_x, model_lab), mask


def corrupt_labels(labels, fraction: float, num_classes: int, seed: int):
    """Reassign ``fraction`` of labels to a different class chosen uniformly.

    Returns ``(new_labels, corrupted_mask)``.
    """
    lab = np.asarray(labels).copy()
    rng = np.random.default_rng(seed)
    n = len(lab)
    idx = rng.choice(n, size=int(round(fraction * n)), replace=False)
    shift = rng.integers(1, num_classes, size=len(idx))
    lab[idx] = (lab[idx] + shift) % num_classes
    mask = np.zeros(n, bool)
    mask[idx] = True
    return lab, mask
