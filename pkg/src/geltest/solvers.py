"""One-sample GEL solvers.

Each solver reweights the rows of a moment matrix so that the weighted
mean of the rows is zero while staying as close as possible to uniform,
with closeness measured by one of three divergences:

* empirical likelihood (EL), ``KL(uniform || pi)``, weights strictly positive;
* exponential tilting (ET), ``KL(pi || uniform)``, weights may be zero;
* Euclidean likelihood, ``1/2 sum (pi_i - 1/n)^2``, weights may be negative.

EL and ET are solved through their concave/convex duals by Newton's
method; the Euclidean problem has a closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .hull import hull_membership
from .moments import MomentMatrix

ZERO_WEIGHT = 1e-14
LN2 = math.log(2.0)


class DivergenceKind(str, enum.Enum):
    EL = "el"
    ET = "et"
    EUCLIDEAN = "euclidean"


class Status(str, enum.Enum):
    CONVERGED = "converged"
    HULL_FAIL = "hull-fail"
    DIVERGED_INFINITE = "diverged-infinite"
    MAX_ITERATIONS = "max-iterations"


class SingularHessianError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and caps for the dual Newton solvers.

    ``param_cap`` and ``grad_cap`` abort EL when the dual runs off to
    infinity, which is how a target on the hull boundary shows up.
    ``whiten`` solves on an orthonormalised copy of the moment rows; the
    weights are unchanged (the problem is invariant to invertible linear
    maps of the moments) but Newton converges in far fewer steps.
    """

    grad_tolerance: float = 1e-8
    param_cap: float = 1e8
    grad_cap: float = 1e8
    max_iterations: int = 200
    el_step: float = 1.0
    et_step: float = 0.5
    hull_epsilon: float = 1e-7
    hull_max_iterations: int = 20_000
    rng_seed: int = 0
    ridge: float = 1e-10
    whiten: bool = True
    check_hull: bool = True

    def __post_init__(self):
        for name in ("grad_tolerance", "param_cap", "grad_cap", "hull_epsilon", "ridge"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("el_step", "et_step"):
            if not 0 < getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.max_iterations < 1 or self.hull_max_iterations < 1:
            raise ValueError("iteration budgets must be positive")


@dataclass
class GelSolution:
    """Result of a one-sample GEL solve.

    ``divergence_nats`` holds the divergence of the chosen member (the
    quadratic objective for the Euclidean member). Failed solves carry an
    infinite divergence and no weights.
    """

    kind: DivergenceKind
    status: Status
    weights: Optional[np.ndarray]
    dual: Optional[np.ndarray]
    divergence_nats: float
    iterations: int = 0
    final_grad_norm: float = float("nan")
    hessian_rank: int = 0
    hotelling_t2: Optional[float] = None
    dual_trace: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def converged(self) -> bool:
        return self.status == Status.CONVERGED

    @property
    def divergence_bits(self) -> float:
        return self.divergence_nats / LN2

    @property
    def score(self) -> float:
        """``2 ** divergence_bits``; 1.0 means a perfect match."""
        if math.isinf(self.divergence_nats):
            return math.inf
        return math.exp(self.divergence_nats)

    @property
    def wilks(self) -> float:
        if self.kind != DivergenceKind.EL:
            return float("nan")
        return wilks_statistic(self)

    @property
    def log_likelihood(self) -> float:
        """``sum_i log pi_i``; ``-inf`` when any weight is zero or the solve failed."""
        if self.weights is None or not np.all(self.weights > 0):
            return -math.inf
        return float(np.sum(np.log(self.weights)))


def modified_log(z, n: int, order: int = 0):
    """Logarithm continued by its second-order Taylor expansion below ``1/n``.

    ``order`` selects the value (0) or the first (1) or second (2)
    derivative. Value and both derivatives are continuous at ``z = 1/n``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    z = np.asarray(z, dtype=float)
    low = z < 1.0 / n
    safe = np.where(low, 1.0, z)
    if order == 0:
        out = np.where(low, math.log(1.0 / n) - 1.5 + 2.0 * n * z - 0.5 * n * n * z * z, np.log(safe))
    elif order == 1:
        out = np.where(low, 2.0 * n - n * n * z, 1.0 / safe)
    elif order == 2:
        out = np.where(low, -float(n * n), -1.0 / (safe * safe))
    else:
        raise ValueError("order must be 0, 1 or 2")
    return out if out.ndim else float(out)


def wilks_statistic(solution: GelSolution) -> float:
    """``-2 sum_i log(n pi_i)`` for an EL solution (asymptotically chi-square)."""
    if solution.kind != DivergenceKind.EL:
        raise ValueError("the Wilks statistic is defined for empirical likelihood solutions")
    if not solution.converged or solution.weights is None:
        return math.inf
    w = solution.weights
    if np.any(w <= 0):
        return math.inf
    return float(-2.0 * np.sum(np.log(len(w) * w)))


def _rows(moments) -> np.ndarray:
    if isinstance(moments, MomentMatrix):
        return moments.rows
    rows = np.asarray(moments, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise ValueError("moments must be a non-empty 2-D array")
    if not np.all(np.isfinite(rows)):
        raise ValueError("moment matrix has non-finite entries")
    return rows


def _sphere(rows, enabled: bool):
    """Return (white_rows, A, rank) with ``white = rows @ A``."""
    n, p = rows.shape
    if not enabled:
        rank = np.linalg.matrix_rank(rows) if rows.any() else 0
        return rows, np.eye(p), int(rank)
    # rescale first so tiny (even subnormal) moments do not overflow 1/s
    size = float(np.max(np.abs(rows)))
    if size == 0:
        return np.zeros((n, 0)), np.zeros((p, 0)), 0
    _, s, vt = np.linalg.svd(rows / size, full_matrices=False)
    keep = s > max(n, p) * np.finfo(float).eps * s[0]
    A = vt[keep].T * (math.sqrt(n) / s[keep])
    return (rows / size) @ A, A / size, int(keep.sum())


def _raw_dual(A, lam):
    # multipliers for the unwhitened rows scale like 1/|rows| and may exceed
    # the float range for tiny moments; inf is then the honest value
    with np.errstate(over="ignore", invalid="ignore"):
        return A @ lam


def _newton_direction(hess, grad, ridge):
    try:
        return linalg.cho_solve(linalg.cho_factor(hess), grad)
    except linalg.LinAlgError:
        pass
    p = hess.shape[0]
    bump = ridge * max(np.trace(hess), np.finfo(float).tiny) / p
    try:
        return linalg.cho_solve(linalg.cho_factor(hess + bump * np.eye(p)), grad)
    except linalg.LinAlgError as exc:
        raise SingularHessianError("dual Hessian is singular even after ridge") from exc


def _failed(kind, status, iterations=0, grad_norm=float("nan"), rank=0, trace=()):
    return GelSolution(
        kind, status, None, None, math.inf, iterations, grad_norm, rank, dual_trace=tuple(trace)
    )


def _hull_ok(white, config) -> bool:
    if not config.check_hull:
        return True
    verdict = hull_membership(
        white, None, config.hull_epsilon, config.rng_seed, config.hull_max_iterations
    )
    # indeterminate counts as outside
    return verdict.inside


def _el_dual(W, lam, n):
    z = 1.0 + W @ lam
    val = float(np.sum(modified_log(z, n)))
    return z, val


def _line_search(objective, lam, step, t0, current, better):
    """Shrink ``t`` until the objective does not get worse; None on failure."""
    t = t0
    for _ in range(60):
        cand = lam + t * step
        val = objective(cand)
        if better(val, current):
            return cand, val
        t *= 0.5
    return None, None


def _solve_el(rows, config: SolverConfig) -> GelSolution:
    kind = DivergenceKind.EL
    n = rows.shape[0]
    W, A, rank = _sphere(rows, config.whiten)
    if rank == 0:
        return _uniform(kind, n, rows.shape[1])
    if not _hull_ok(W, config):
        return _failed(kind, Status.HULL_FAIL, rank=rank)

    slack = 1e-13
    lam = np.zeros(W.shape[1])
    z, obj = _el_dual(W, lam, n)
    trace = [obj]
    status = Status.MAX_ITERATIONS
    gnorm = math.nan
    it = 0
    for it in range(config.max_iterations + 1):
        d1 = modified_log(z, n, 1)
        d2 = -modified_log(z, n, 2)
        grad = W.T @ d1
        gnorm = float(np.linalg.norm(grad))
        # sum(pi) - 1 = -lam'grad / n, which a small gradient alone does not
        # bound when lam is large (targets near the hull boundary)
        if gnorm <= config.grad_tolerance and abs(lam @ grad) / n <= config.grad_tolerance:
            status = Status.CONVERGED
            break
        if gnorm > config.grad_cap:
            return _failed(kind, Status.DIVERGED_INFINITE, it, gnorm, rank, trace)
        if it == config.max_iterations:
            break
        hess = (W * d2[:, None]).T @ W
        step = _newton_direction(hess, grad, config.ridge)
        lam_new, obj_new = _line_search(
            lambda l: _el_dual(W, l, n)[1],
            lam,
            step,
            config.el_step,
            obj,
            lambda new, old: new >= old - slack * max(1.0, abs(old)),
        )
        if lam_new is None:
            break
        lam, obj = lam_new, obj_new
        trace.append(obj)
        if np.linalg.norm(lam) > config.param_cap:
            return _failed(kind, Status.DIVERGED_INFINITE, it + 1, gnorm, rank, trace)
        z = 1.0 + W @ lam

    if status == Status.CONVERGED and np.any(z < 1.0 / n):
        # the modified and true logarithms share their optimum whenever the
        # true problem is feasible; landing on the quadratic branch means it is not
        return _failed(kind, Status.DIVERGED_INFINITE, it, gnorm, rank, trace)
    with np.errstate(divide="ignore"):
        weights = 1.0 / (n * z)
        if status == Status.CONVERGED:
            weights /= weights.sum()
        div = float(np.mean(np.log(z))) if np.all(z > 0) else math.inf
    return GelSolution(kind, status, weights, _raw_dual(A, lam), div, it, gnorm, rank, dual_trace=tuple(trace))


def _et_state(W, lam, n):
    s = W @ lam
    lse = logsumexp(s)
    return s, lse, float(lse - math.log(n))


def _solve_et(rows, config: SolverConfig) -> GelSolution:
    kind = DivergenceKind.ET
    n = rows.shape[0]
    W, A, rank = _sphere(rows, config.whiten)
    if rank == 0:
        return _uniform(kind, n, rows.shape[1])
    if not _hull_ok(W, config):
        return _failed(kind, Status.HULL_FAIL, rank=rank)

    slack = 1e-13
    lam = np.zeros(W.shape[1])
    s, lse, logf = _et_state(W, lam, n)
    trace = [logf]
    status = Status.MAX_ITERATIONS
    gnorm = math.nan
    it = 0
    for it in range(config.max_iterations + 1):
        pi = np.exp(s - lse)
        moment = W.T @ pi
        # gradient of f(lam) = mean_i exp(lam . m_i)
        gnorm = float(math.exp(logf) * np.linalg.norm(moment))
        if gnorm <= config.grad_tolerance:
            status = Status.CONVERGED
            break
        if it == config.max_iterations:
            break
        hess = (W * pi[:, None]).T @ W
        step = _newton_direction(hess, moment, config.ridge)
        lam_new, logf_new = _line_search(
            lambda l: _et_state(W, l, n)[2],
            lam,
            -step,
            config.et_step,
            logf,
            lambda new, old: new <= old + slack * max(1.0, abs(old)),
        )
        if lam_new is None:
            break
        lam, logf = lam_new, logf_new
        trace.append(logf)
        if np.linalg.norm(lam) > config.param_cap:
            return _failed(kind, Status.DIVERGED_INFINITE, it + 1, gnorm, rank, trace)
        s, lse, _ = _et_state(W, lam, n)

    if status == Status.CONVERGED:
        # half steps converge only linearly; one full step sharpens the weights
        # to round-off without changing where the iteration stopped
        pi = np.exp(s - lse)
        hess = (W * pi[:, None]).T @ W
        try:
            polish = lam - _newton_direction(hess, W.T @ pi, config.ridge)
        except SingularHessianError:
            polish = None
        if polish is not None:
            s_p, lse_p, logf_p = _et_state(W, polish, n)
            if logf_p <= logf + slack * max(1.0, abs(logf)):
                lam, s, lse, logf = polish, s_p, lse_p, logf_p
                trace.append(logf)
                gnorm = float(math.exp(logf) * np.linalg.norm(W.T @ np.exp(s - lse)))

    weights = np.exp(s - lse)
    weights[weights < ZERO_WEIGHT] = 0.0
    pos = weights > 0
    div = float(np.sum(weights[pos] * np.log(n * weights[pos])))
    return GelSolution(kind, status, weights, _raw_dual(A, lam), div, it, gnorm, rank, dual_trace=tuple(trace))


def _uniform(kind, n, p):
    div = 0.0
    return GelSolution(kind, Status.CONVERGED, np.full(n, 1.0 / n), np.zeros(p), div, 0, 0.0, 0)


def euclidean_qp(rows, base=None):
    """Minimise ``1/2 |pi - base|^2`` subject to ``sum pi = 1``, ``sum pi_i m_i = 0``.

    ``base`` defaults to uniform weights and must sum to one. Returns the
    weights, the constraint multipliers and the objective. Directions in
    which the centred moments are numerically flat are dropped; if the
    constraint then cannot be met (the target lies off the affine hull of
    the rows) a :class:`SingularHessianError` is raised.
    """
    rows = np.asarray(rows, dtype=float)
    n, p = rows.shape
    base = np.full(n, 1.0 / n) if base is None else np.asarray(base, dtype=float)
    size = float(np.max(np.abs(rows)))
    if size == 0:
        return base.copy(), np.zeros(p), 0.0
    scaled = rows / size
    b = base @ scaled
    centered = scaled - scaled.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    keep = s > max(n, p) * np.finfo(float).eps * max(1.0, np.linalg.norm(scaled, 2))
    v = vt[keep].T
    # gram = V S^2 V'; solve gram a = -b on the retained subspace
    a = -v @ ((v.T @ b) / s[keep] ** 2)
    residual = centered.T @ (centered @ a) + b
    if np.linalg.norm(residual) > 1e-9 * max(1.0, np.linalg.norm(b)):
        raise SingularHessianError("moment covariance is singular and the constraint is infeasible")
    delta = centered @ a
    return base + delta, a / size, 0.5 * float(delta @ delta)


def _solve_euclidean(rows, config: SolverConfig) -> GelSolution:
    n = rows.shape[0]
    weights, a, objective = euclidean_qp(rows)
    rank = int(np.linalg.matrix_rank(rows - rows.mean(axis=0))) if n > 1 else 0
    sol = GelSolution(DivergenceKind.EUCLIDEAN, Status.CONVERGED, weights, a, objective, 1, 0.0, rank)
    sol.hotelling_t2 = objective * 2.0 * n * (n - 1)
    return sol


_SOLVERS = {
    DivergenceKind.EL: _solve_el,
    DivergenceKind.ET: _solve_et,
    DivergenceKind.EUCLIDEAN: _solve_euclidean,
}


def solve(moments, kind=DivergenceKind.ET, config: Optional[SolverConfig] = None) -> GelSolution:
    """Solve the one-sample GEL problem for ``kind``."""
    kind = DivergenceKind(kind)
    return _SOLVERS[kind](_rows(moments), config or SolverConfig())


def solve_el(moments, config: Optional[SolverConfig] = None) -> GelSolution:
    """Empirical likelihood via full Newton steps on the modified-log dual."""
    return solve(moments, DivergenceKind.EL, config)


def solve_et(moments, config: Optional[SolverConfig] = None) -> GelSolution:
    """Exponential tilting via half Newton steps on the log-partition dual."""
    return solve(moments, DivergenceKind.ET, config)


def solve_euclidean(moments, config: Optional[SolverConfig] = None) -> GelSolution:
    """Euclidean likelihood; ``hotelling_t2`` equals ``n mbar' S^-1 mbar``."""
    return solve(moments, DivergenceKind.EUCLIDEAN, config)


__all__ = [
    "DivergenceKind",
    "GelSolution",
    "SingularHessianError",
    "SolverConfig",
    "Status",
    "euclidean_qp",
    "modified_log",
    "solve",
    "solve_el",
    "solve_et",
    "solve_euclidean",
    "wilks_statistic",
]
