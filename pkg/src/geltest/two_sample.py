"""Two-sample GEL by stacking.

Weights ``pi`` on the data sample and ``psi`` on the model sample are
found jointly so that the two reweighted moment means agree. Writing
``xi = [pi, psi] / 2`` and stacking rows ``[m_i, 1]`` (data) above
``[-m'_j, -1]`` (model) turns this into a one-sample problem in ``xi``;
the appended coordinate forces each group to carry exactly half the mass.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import KernelSpec
from .moments import FeatureSet, WitnessSet, embed
from .solvers import (
    LN2,
    ZERO_WEIGHT,
    DivergenceKind,
    GelSolution,
    SolverConfig,
    Status,
    euclidean_qp,
    solve,
)


class UnequalSizeWarning(UserWarning):
    """Two-sample GEL has O(1/n) bias; unequal sizes make sides hard to compare."""


@dataclass(frozen=True)
class TwoSampleMoments:
    stacked: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        if self.stacked.shape[0] != self.n + self.m:
            raise ValueError("stacked rows must equal n + m")
        if not np.all(np.isfinite(self.stacked)):
            raise ValueError("stacked moments contain non-finite entries")


def stack_two_sample(data_moments, model_moments) -> TwoSampleMoments:
    """Stack ``[m_i, +1]`` for data rows over ``[-m'_j, -1]`` for model rows."""
    x = np.asarray(data_moments, dtype=float)
    y = np.asarray(model_moments, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] < 1 or y.shape[0] < 1:
        raise ValueError("both samples must be non-empty")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"moment dimensions differ: {x.shape[1]} vs {y.shape[1]}")
    n, m = x.shape[0], y.shape[0]
    if n != m:
        warnings.warn(
            f"unequal sample sizes ({n} data, {m} model); per-side divergences carry O(1/n) bias",
            UnequalSizeWarning,
            stacklevel=2,
        )
    stacked = np.vstack([np.hstack([x, np.ones((n, 1))]), np.hstack([-y, -np.ones((m, 1))])])
    return TwoSampleMoments(stacked, n, m)


def _side_divergence(kind: DivergenceKind, w: np.ndarray) -> float:
    k = len(w)
    if kind == DivergenceKind.EL:
        if np.any(w <= 0):
            return math.inf
        return float(-np.mean(np.log(k * w)))
    if kind == DivergenceKind.ET:
        pos = w > 0
        return float(np.sum(w[pos] * np.log(k * w[pos])))
    return 0.5 * float(np.sum((w - 1.0 / k) ** 2))


@dataclass
class TwoSampleSolution:
    """Data-side weights ``pi`` and model-side weights ``psi``.

    Scores are ``2 ** D`` per side; the conventional display puts the
    model score first (``"model/data"``).
    """

    kind: DivergenceKind
    status: Status
    pi: Optional[np.ndarray]
    psi: Optional[np.ndarray]
    divergence_data_nats: float
    divergence_model_nats: float
    joint: Optional[GelSolution] = None

    @property
    def converged(self) -> bool:
        return self.status == Status.CONVERGED

    @property
    def divergence_data_bits(self) -> float:
        return self.divergence_data_nats / LN2

    @property
    def divergence_model_bits(self) -> float:
        return self.divergence_model_nats / LN2

    @property
    def scores(self):
        """``(model score, data score)``."""
        return (_score(self.divergence_model_nats), _score(self.divergence_data_nats))

    def score_string(self, digits: int = 3) -> str:
        return "/".join(_fmt_score(s, digits) for s in self.scores)

    @property
    def alpha(self) -> int:
        """Number of model samples with zero weight."""
        return 0 if self.psi is None else int(np.sum(self.psi <= ZERO_WEIGHT))

    @property
    def beta(self) -> int:
        """Number of data samples with zero weight."""
        return 0 if self.pi is None else int(np.sum(self.pi <= ZERO_WEIGHT))


def _score(nats):
    return math.inf if math.isinf(nats) else math.exp(nats)


def _fmt_score(s, digits=3):
    return "+inf" if math.isinf(s) else f"{s:.{digits}f}"


def solve_two_sample(
    stacked: TwoSampleMoments,
    divergence=DivergenceKind.ET,
    config: Optional[SolverConfig] = None,
) -> TwoSampleSolution:
    """Solve the stacked problem and split the weights back per side.

    EL and ET reuse the one-sample dual on the stacked rows: both
    objectives differ from their stacked counterparts only by constants.
    The Euclidean member is solved as the stacked quadratic program with
    per-side uniform targets ``1/(2n)`` and ``1/(2m)``.
    """
    kind = DivergenceKind(divergence)
    config = config or SolverConfig()
    n, m = stacked.n, stacked.m
    if kind == DivergenceKind.EUCLIDEAN:
        base = np.concatenate([np.full(n, 0.5 / n), np.full(m, 0.5 / m)])
        xi, a, _ = euclidean_qp(stacked.stacked, base)
        joint = GelSolution(kind, Status.CONVERGED, xi, a, math.nan, 1, 0.0, stacked.stacked.shape[1])
    else:
        joint = solve(stacked.stacked, kind, config)
    if joint.weights is None:
        return TwoSampleSolution(kind, joint.status, None, None, math.inf, math.inf, joint)
    pi = 2.0 * joint.weights[:n]
    psi = 2.0 * joint.weights[n:]
    return TwoSampleSolution(
        kind, joint.status, pi, psi, _side_divergence(kind, pi), _side_divergence(kind, psi), joint
    )


def kgel2(
    data: FeatureSet,
    model: FeatureSet,
    witnesses: WitnessSet,
    kernel: KernelSpec,
    divergence=DivergenceKind.ET,
    config: Optional[SolverConfig] = None,
) -> TwoSampleSolution:
    """Kernel two-sample test: match mean embeddings at the witness points.

    A product kernel with a label factor gives the labeled variant; it
    needs labels on both samples and on the witnesses.
    """
    if data.d != model.d:
        raise ValueError(f"dimension mismatch: data d={data.d}, model d={model.d}")
    stacked = stack_two_sample(embed(data, witnesses, kernel), embed(model, witnesses, kernel))
    return solve_two_sample(stacked, divergence, config)
