"""Approximate convex-hull membership by the triangle algorithm.

Given points ``v_1..v_n`` and a target ``p``, the triangle algorithm keeps
an iterate ``x`` inside the hull and looks for a *pivot*: a point ``v``
with ``|x - v| >= |p - v|``. If none exists, the perpendicular bisector
of ``[x, p]`` separates ``p`` from the hull and ``x`` certifies that
``p`` lies outside. Otherwise ``x`` moves towards ``p`` along the pivot
direction.

Plain triangle steps converge slowly when ``p`` sits on a face of the
hull, which is exactly the situation exponential tilting produces on
dropped modes. After each pivot we therefore re-minimise the distance
over the affine hull of the current support (Wolfe's "corral" step),
which keeps every iterate inside the hull and terminates finitely.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

INSIDE = "inside"
OUTSIDE = "outside"
INDETERMINATE = "indeterminate"

_WEIGHT_TOL = 1e-14
_AFFINE_TOL = 1e-12


@dataclass(frozen=True)
class HullVerdict:
    """Outcome of :func:`hull_membership`.

    ``coefficients`` are convex weights of the final iterate (length n).
    For an ``outside`` verdict, ``pivot`` is the separating witness point
    and ``direction = target - pivot`` is the normal of the separating
    hyperplane. ``distance_bound`` is an upper bound on the distance from
    the target to the hull when inside, a lower bound when outside.
    """

    kind: str
    coefficients: np.ndarray
    pivot: Optional[np.ndarray]
    direction: Optional[np.ndarray]
    distance_bound: float
    iterations: int

    @property
    def inside(self) -> bool:
        return self.kind == INSIDE


def _affine_minimizer(V):
    """Coefficients (summing to 1) of the min-norm point of aff(rows of V)."""
    k = V.shape[0]
    if k == 1:
        return np.ones(1)
    # bordered Gram system [[G, 1], [1', 0]]; cheap while the support is
    # affinely independent, which corral steps maintain up to round-off
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = V @ V.T
    kkt[:k, k] = kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", linalg.LinAlgWarning)
        try:
            return linalg.solve(kkt, rhs, assume_a="sym")[:k]
        except (linalg.LinAlgError, linalg.LinAlgWarning):
            pass
    base = V[0]
    D = V[1:] - base
    beta, *_ = np.linalg.lstsq(D.T, -base, rcond=None)
    return np.concatenate([[1.0 - beta.sum()], beta])


def hull_membership(
    points,
    target=None,
    epsilon: float = 1e-7,
    seed: int = 0,
    max_iterations: int = 20_000,
) -> HullVerdict:
    """Decide whether ``target`` lies in the convex hull of ``points``.

    Parameters
    ----------
    points : (n, p) array
    target : (p,) array, default the origin
    epsilon : float
        Relative tolerance; ``inside`` means some convex combination lies
        within ``epsilon * scale`` of the target, with ``scale`` the
        largest distance from the target to a point.
    seed : int
        Seeds the tie-breaking order among equally good pivots.
    max_iterations : int
        Pivot budget. Running out yields ``indeterminate``, which callers
        should handle as ``outside``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, p = pts.shape
    if n < 1:
        raise ValueError("need at least one point")
    tgt = np.zeros(p) if target is None else np.asarray(target, dtype=float)
    if tgt.shape != (p,):
        raise ValueError(f"target has shape {tgt.shape}, points have dimension {p}")

    V = pts - tgt
    norms = np.linalg.norm(V, axis=1)
    scale = float(norms.max())
    tol = epsilon * scale
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)

    def first_argmin(values):
        return int(order[np.argmin(values[order])])

    support = [first_argmin(norms)]
    w = np.ones(1)

    def verdict(kind, x, iters, bound, pivot=None):
        coef = np.zeros(n)
        coef[support] = w
        coef /= coef.sum()
        piv = None if pivot is None else pivot + tgt
        direction = None if pivot is None else -pivot
        return HullVerdict(kind, coef, piv, direction, float(bound), iters)

    prev_dist = np.inf
    for it in range(max_iterations + 1):
        x = w @ V[support]
        xx = float(x @ x)
        dist = np.sqrt(xx)
        if dist <= tol:
            return verdict(INSIDE, x, it, dist)
        g = V @ x
        j = first_argmin(g)
        # v is a pivot iff |x - v|^2 >= |v|^2, i.e. v.x <= |x|^2 / 2
        if g[j] > 0.5 * xx:
            return verdict(OUTSIDE, x, it, g[j] / dist, pivot=x)
        # every corral step strictly shrinks the distance; a stall is round-off
        if it == max_iterations or j in support or dist >= prev_dist:
            break
        prev_dist = dist
        support.append(j)
        w = np.append(w, 0.0)
        # corral step: move to the min-norm point of the support's affine hull,
        # backing off to the last feasible point whenever a weight would go negative
        while True:
            alpha = _affine_minimizer(V[support])
            if np.all(alpha > _AFFINE_TOL):
                w = alpha
                break
            neg = alpha <= _AFFINE_TOL
            theta = np.min(w[neg] / (w[neg] - alpha[neg]))
            theta = min(max(theta, 0.0), 1.0)
            w = w + theta * (alpha - w)
            keep = w > _WEIGHT_TOL
            if not keep.any():
                keep[np.argmax(w)] = True
            support = [s for s, k in zip(support, keep) if k]
            w = w[keep]
            w = w / w.sum()
    x = w @ V[support]
    return verdict(INDETERMINATE, x, it, np.linalg.norm(x))
