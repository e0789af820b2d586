"""Kernels on (feature, label) samples.

Four variants are provided: the exponential kernel on feature vectors,
the delta kernel on discrete labels, a string kernel on label-hierarchy
paths, and the product of an image-space kernel with a label kernel.
Every variant exposes ``gram(a, b, a_labels, b_labels)`` returning the
full kernel matrix; :func:`eval_kernel` is the single-pair convenience.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np


class Sample(NamedTuple):
    features: np.ndarray
    label: object = None


@dataclass(frozen=True)
class LabelHierarchy:
    """Root-to-leaf node paths for each label id.

    The leaf node of every path must be the label's own name.
    """

    paths: Mapping[object, tuple]

    def __post_init__(self):
        fixed = {}
        for label, path in self.paths.items():
            path = tuple(str(node) for node in path)
            if not path:
                raise ValueError(f"empty hierarchy path for label {label!r}")
            if path[-1] != str(label):
                raise ValueError(
                    f"path for label {label!r} must end at the label itself, got {path[-1]!r}"
                )
            fixed[label] = path
        object.__setattr__(self, "paths", fixed)

    def path(self, label) -> tuple:
        try:
            return self.paths[label]
        except KeyError:
            # labels read from text files may arrive as str while keys are int, or vice versa
            for key, value in self.paths.items():
                if str(key) == str(label):
                    return value
            raise KeyError(f"label {label!r} missing from hierarchy") from None

    @classmethod
    def from_json(cls, path) -> "LabelHierarchy":
        with open(Path(path)) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("hierarchy file must hold a JSON object")
        for label, nodes in raw.items():
            if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
                raise ValueError(f"hierarchy entry {label!r} must be an array of strings")
        return cls(paths=raw)

    def to_json(self) -> dict:
        return {str(k): list(v) for k, v in self.paths.items()}


def hierarchy_path_score(path_a: Sequence, path_b: Sequence) -> int:
    """Smith-Waterman score with identity substitution and free gaps.

    With match = 1, mismatch = 0 and zero gap cost the local alignment
    score coincides with the length of the longest common subsequence,
    which is what this returns.
    """
    a = list(path_a)
    b = list(path_b)
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    best = 0
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            diag = prev[j - 1] + (1 if ai == b[j - 1] else 0)
            cur[j] = max(0, diag, prev[j], cur[j - 1])
            if cur[j] > best:
                best = cur[j]
        prev = cur
    return best


def _require_labels(name, a_labels, b_labels):
    if a_labels is None or b_labels is None:
        raise ValueError(f"{name} kernel needs labels on both arguments")


@dataclass(frozen=True)
class ExponentialKernel:
    """``k(x, y) = exp(x.y / d)`` with ``d`` the feature dimension."""

    dim_normalizer: int

    def __post_init__(self):
        if int(self.dim_normalizer) < 1:
            raise ValueError("dim_normalizer must be a positive integer")

    is_label_kernel = False

    def gram(self, a, b, a_labels=None, b_labels=None) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        if a.shape[1] != b.shape[1]:
            raise ValueError(f"feature dimensions differ: {a.shape[1]} vs {b.shape[1]}")
        if a.shape[1] != self.dim_normalizer:
            raise ValueError(
                f"exponential kernel built for d={self.dim_normalizer}, got d={a.shape[1]}"
            )
        with np.errstate(over="ignore"):
            return np.exp(a @ b.T / self.dim_normalizer)


@dataclass(frozen=True)
class DeltaLabelKernel:
    """Indicator of label equality."""

    is_label_kernel = True

    def gram(self, a, b, a_labels=None, b_labels=None) -> np.ndarray:
        _require_labels("delta", a_labels, b_labels)
        la = np.asarray(a_labels)
        lb = np.asarray(b_labels)
        return (la[:, None] == lb[None, :]).astype(float)


@dataclass(frozen=True)
class HierarchyPathKernel:
    """String kernel between the hierarchy paths of two labels."""

    hierarchy: LabelHierarchy
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    is_label_kernel = True

    def score(self, la, lb) -> float:
        key = (la, lb) if str(la) <= str(lb) else (lb, la)
        if key not in self._cache:
            self._cache[key] = float(
                hierarchy_path_score(self.hierarchy.path(la), self.hierarchy.path(lb))
            )
        return self._cache[key]

    def gram(self, a, b, a_labels=None, b_labels=None) -> np.ndarray:
        _require_labels("hierarchy-path", a_labels, b_labels)
        la = np.asarray(a_labels)
        lb = np.asarray(b_labels)
        ua, ia = np.unique(la, return_inverse=True)
        ub, ib = np.unique(lb, return_inverse=True)
        table = np.array([[self.score(x, y) for y in ub] for x in ua], dtype=float)
        return table[np.ix_(ia.ravel(), ib.ravel())]


@dataclass(frozen=True)
class ProductKernel:
    """Image-space kernel times label-space kernel."""

    image: ExponentialKernel
    label: Union[DeltaLabelKernel, HierarchyPathKernel]

    is_label_kernel = False

    def __post_init__(self):
        if getattr(self.image, "is_label_kernel", True) or isinstance(self.image, ProductKernel):
            raise ValueError("product kernel needs an image-space kernel as its first factor")
        if not getattr(self.label, "is_label_kernel", False):
            raise ValueError("product kernel needs a label-space kernel as its second factor")

    def gram(self, a, b, a_labels=None, b_labels=None) -> np.ndarray:
        _require_labels("product", a_labels, b_labels)
        return self.image.gram(a, b) * self.label.gram(a, b, a_labels, b_labels)


KernelSpec = Union[ExponentialKernel, DeltaLabelKernel, HierarchyPathKernel, ProductKernel]


def needs_labels(kernel: KernelSpec) -> bool:
    return not isinstance(kernel, ExponentialKernel)


def eval_kernel(kernel: KernelSpec, a: Sample, b: Sample) -> float:
    """Evaluate ``kernel`` on a single pair of samples."""
    if not isinstance(a, Sample):
        a = Sample(np.asarray(a))
    if not isinstance(b, Sample):
        b = Sample(np.asarray(b))
    fa = np.atleast_1d(np.asarray(a.features, dtype=float))[None, :]
    fb = np.atleast_1d(np.asarray(b.features, dtype=float))[None, :]
    if fa.shape[1] != fb.shape[1]:
        raise ValueError(f"feature dimensions differ: {fa.shape[1]} vs {fb.shape[1]}")
    la = None if a.label is None else [a.label]
    lb = None if b.label is None else [b.label]
    return float(kernel.gram(fa, fb, la, lb)[0, 0])


def make_kernel(
    name: str,
    dim: int,
    hierarchy: Optional[LabelHierarchy] = None,
) -> KernelSpec:
    """Build a kernel from its CLI name."""
    if name == "exponential":
        return ExponentialKernel(dim)
    if name == "product-delta":
        return ProductKernel(ExponentialKernel(dim), DeltaLabelKernel())
    if name == "product-hierarchy":
        if hierarchy is None:
            raise ValueError("product-hierarchy kernel needs a label hierarchy")
        return ProductKernel(ExponentialKernel(dim), HierarchyPathKernel(hierarchy))
    raise ValueError(f"unknown kernel {name!r}")
