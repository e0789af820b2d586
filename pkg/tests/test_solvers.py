import math

import numpy as np
import pytest
from scipy.optimize import minimize

from geltest.solvers import (
    DivergenceKind,
    SolverConfig,
    Status,
    euclidean_qp,
    modified_log,
    solve,
    solve_el,
    solve_et,
    solve_euclidean,
    wilks_statistic,
)

KINDS = ["el", "et", "euclidean"]


def two_point(a, b):
    return np.array([[a], [b]], dtype=float)


@pytest.mark.parametrize("kind", KINDS)
def test_zero_rows_give_uniform(kind):
    sol = solve(np.zeros((6, 2)), kind)
    assert sol.status == Status.CONVERGED
    assert np.allclose(sol.weights, 1 / 6)
    assert sol.divergence_nats == 0.0


@pytest.mark.parametrize(
    "kind, divergence",
    [
        ("el", 0.5 * math.log(4 / 3)),
        ("et", 0.75 * math.log(1.5) + 0.25 * math.log(0.5)),
        ("euclidean", 1 / 16),
    ],
)
def test_two_point_oracle(kind, divergence):
    sol = solve(two_point(-1, 3), kind)
    assert sol.converged
    assert np.max(np.abs(sol.weights - [0.75, 0.25])) <= 1e-8
    assert abs(sol.divergence_nats - divergence) <= 1e-6


def test_euclidean_two_point_hotelling():
    sol = solve_euclidean(two_point(-1, 3))
    assert sol.hotelling_t2 == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize("kind", ["el", "et"])
def test_same_sign_rows_hull_fail(kind):
    sol = solve(two_point(1, 2), kind)
    assert sol.status == Status.HULL_FAIL
    assert math.isinf(sol.divergence_nats) and math.isinf(sol.score)
    assert sol.log_likelihood == -math.inf


def test_euclidean_outside_hull_negative_weight():
    sol = solve_euclidean(two_point(1, 2))
    assert np.allclose(sol.weights, [2.0, -1.0])
    assert sol.divergence_nats == pytest.approx(2.25)


def test_el_boundary_diverges():
    sol = solve_el(two_point(0, 2))
    assert sol.status == Status.DIVERGED_INFINITE
    assert math.isinf(sol.divergence_nats)


def test_et_boundary_limit():
    sol = solve_et(two_point(0, 2))
    assert sol.converged
    assert np.max(np.abs(sol.weights - [1.0, 0.0])) <= 1e-6
    assert abs(sol.divergence_nats - math.log(2)) <= 1e-4


def test_modified_log_examples():
    assert modified_log(1.0, 2) == 0.0
    for n in (1, 2, 7, 100):
        z = 1.0 / n
        below = np.nextafter(z, 0)
        assert modified_log(z, n) == pytest.approx(math.log(1 / n))
        assert modified_log(below, n) == pytest.approx(math.log(1 / n), abs=1e-9)
        assert modified_log(z, n, 1) == pytest.approx(n)
        assert modified_log(below, n, 1) == pytest.approx(n)
        assert modified_log(below, n, 2) == pytest.approx(modified_log(z, n, 2))
    with pytest.raises(ValueError):
        modified_log(1.0, 0)


def test_wilks_examples():
    sol = solve_el(two_point(-1, 3))
    assert wilks_statistic(sol) == pytest.approx(-2 * math.log(0.75), abs=1e-8)
    assert wilks_statistic(solve_el(np.zeros((4, 1)))) == 0.0
    assert sol.wilks == wilks_statistic(sol)
    assert math.isnan(solve_et(two_point(-1, 3)).wilks)
    with pytest.raises(ValueError):
        wilks_statistic(solve_et(two_point(-1, 3)))
    assert math.isinf(wilks_statistic(solve_el(two_point(1, 2))))


def test_divergence_bits_and_score():
    sol = solve_et(two_point(-1, 3))
    assert sol.divergence_bits == pytest.approx(sol.divergence_nats / math.log(2))
    assert sol.score == pytest.approx(2 ** sol.divergence_bits)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(grad_tolerance=0)
    with pytest.raises(ValueError):
        SolverConfig(et_step=1.5)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)


def test_max_iterations_status():
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(50, 3)) + 0.3
    sol = solve_et(rows, SolverConfig(max_iterations=1))
    assert sol.status == Status.MAX_ITERATIONS


def random_feasible(rng, n, p):
    rows = rng.normal(size=(n, p))
    return rows - rows.mean(axis=0) + 0.2 * rng.normal(size=p) * rows.std(axis=0)


@pytest.mark.parametrize("kind", ["el", "et", "euclidean"])
def test_feasibility_and_sign_rules(kind):
    rng = np.random.default_rng(5)
    for _ in range(30):
        rows = random_feasible(rng, int(rng.integers(8, 40)), int(rng.integers(1, 4)))
        sol = solve(rows, kind)
        if not sol.converged:
            continue
        assert abs(sol.weights.sum() - 1) <= 1e-9
        assert np.max(np.abs(sol.weights @ rows)) <= 1e-6
        if kind == "el":
            assert np.all(sol.weights > 0)
        elif kind == "et":
            assert np.all(sol.weights >= -1e-12)


def primal_bruteforce(rows, kind):
    n = rows.shape[0]

    def objective(w):
        w = np.clip(w, 1e-300, None)
        if kind == "el":
            return -np.mean(np.log(n * w))
        return float(np.sum(w * np.log(n * w)))

    cons = [
        {"type": "eq", "fun": lambda w: w.sum() - 1.0},
        {"type": "eq", "fun": lambda w: w @ rows},
    ]
    res = minimize(
        objective,
        np.full(n, 1.0 / n),
        method="SLSQP",
        bounds=[(1e-12, 1.0)] * n,
        constraints=cons,
        options={"ftol": 1e-14, "maxiter": 1000},
    )
    return res.fun


@pytest.mark.parametrize("kind", ["el", "et"])
def test_dual_matches_primal_bruteforce(kind):
    rng = np.random.default_rng(21)
    checked = 0
    while checked < 20:
        n = int(rng.integers(4, 13))
        p = int(rng.integers(1, 3))
        rows = random_feasible(rng, n, p)
        sol = solve(rows, kind)
        if not sol.converged:
            continue
        assert abs(sol.divergence_nats - primal_bruteforce(rows, kind)) <= 1e-3
        checked += 1


def test_hotelling_identity():
    rng = np.random.default_rng(2)
    n, p = 50, 5
    for _ in range(100):
        rows = rng.normal(size=(n, p)) + 0.3 * rng.normal(size=p)
        sol = solve_euclidean(rows)
        mbar = rows.mean(axis=0)
        S = np.cov(rows, rowvar=False)
        t2 = n * mbar @ np.linalg.solve(S, mbar)
        assert sol.hotelling_t2 == pytest.approx(t2, rel=1e-8)


def test_el_dual_ascent_monotone():
    rng = np.random.default_rng(8)
    for _ in range(20):
        rows = random_feasible(rng, 40, 3)
        sol = solve_el(rows)
        trace = np.array(sol.dual_trace)
        assert np.all(np.diff(trace) >= -1e-12 * np.maximum(1, np.abs(trace[:-1])))


@pytest.mark.parametrize("kind", KINDS)
def test_permutation_invariance(kind):
    rng = np.random.default_rng(9)
    rows = random_feasible(rng, 30, 2)
    perm = rng.permutation(30)
    a = solve(rows, kind)
    b = solve(rows[perm], kind)
    assert np.allclose(a.weights[perm], b.weights, atol=1e-9)
    assert a.divergence_nats == pytest.approx(b.divergence_nats, abs=1e-10)


@pytest.mark.parametrize("kind", KINDS)
def test_affine_invariance(kind):
    rng = np.random.default_rng(10)
    X = rng.normal(size=(50, 3))
    c = X.mean(axis=0) + 0.1
    A = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    b = rng.normal(size=3)
    base = solve(X - c, kind)
    moved = solve((X @ A.T + b) - (A @ c + b), kind)
    assert np.max(np.abs(base.weights - moved.weights)) <= 1e-6


@pytest.mark.parametrize("kind", ["el", "et"])
def test_whitening_does_not_change_weights(kind):
    rng = np.random.default_rng(12)
    rows = random_feasible(rng, 40, 3)
    a = solve(rows, kind)
    b = solve(rows, kind, SolverConfig(whiten=False))
    assert np.allclose(a.weights, b.weights, atol=1e-8)


def test_euclidean_qp_base_weights():
    rows = np.array([[-1.0], [3.0]])
    w, _, obj = euclidean_qp(rows, np.array([0.5, 0.5]))
    assert np.allclose(w, [0.75, 0.25]) and obj == pytest.approx(1 / 16)


def test_divergence_kind_from_string():
    assert DivergenceKind("el") is DivergenceKind.EL
    with pytest.raises(ValueError):
        solve(np.zeros((3, 1)), "kl")
