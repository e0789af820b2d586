import math

import numpy as np
import pytest

from geltest.diagnostics import (
    aggregate_class_weights,
    bottom_k,
    corrupt_labels,
    gen_disjoint_block_fixture,
    gen_gaussian_mixture,
    hellinger_distance,
    mixture_means,
    oracle_mode_distribution,
    pr_curve_from_weights,
    rank_samples,
    zero_weight_ids,
)


def test_uniform_balanced_class_mass():
    labels = np.repeat(np.arange(5), 4)
    rep = aggregate_class_weights(np.full(20, 1 / 20), labels)
    assert np.allclose(rep.mass_vector(), 0.2)
    assert sum(rep.class_mass.values()) == pytest.approx(1.0, abs=1e-9)


def test_zero_class_mass():
    labels = np.array([0, 0, 1, 1])
    rep = aggregate_class_weights([0.5, 0.5, 0.0, 0.0], labels)
    assert rep.class_mass[1] == 0.0


def test_rescaled_present_modes():
    labels = np.repeat(np.arange(10), 3)
    w = np.where(labels < 8, 1 / 24, 0.0)
    rep = aggregate_class_weights(w, labels, rescale_present_count=8)
    assert all(rep.rescaled[c] == pytest.approx(1.0) for c in range(8))
    assert rep.rescaled[8] == 0.0
    default = aggregate_class_weights(w, labels)
    assert default.rescaled[0] == pytest.approx(10 / 8)


def test_class_report_oracle_and_json():
    labels = np.array([0, 1, 1, 2])
    rep = aggregate_class_weights([0.25, 0.25, 0.25, 0.25], labels, oracle={0: 0.25, 1: 0.5, 2: 0.25})
    assert rep.hellinger_to_oracle == pytest.approx(0.0, abs=1e-7)
    js = rep.to_json()
    assert js["classes"] == [0, 1, 2] and js["class_mass"] == [0.25, 0.5, 0.25]


def test_class_weights_length_mismatch():
    with pytest.raises(ValueError):
        aggregate_class_weights([0.5, 0.5], [0, 1, 2])


@pytest.mark.parametrize(
    "kept, expected",
    [(8, 0.3249), (6, 0.4748), (4, 0.6063), (2, 0.7435)],
)
def test_hellinger_chance_constants(kept, expected):
    p = np.full(10, 0.1)
    q = np.r_[np.full(kept, 1 / kept), np.zeros(10 - kept)]
    assert hellinger_distance(p, q) == pytest.approx(expected, abs=1e-4)


def test_hellinger_basic():
    p = np.array([0.2, 0.3, 0.5])
    assert hellinger_distance(p, p) == pytest.approx(0.0, abs=1e-8)
    assert hellinger_distance([1, 0], [0, 1]) == 1.0
    assert hellinger_distance(p, p[::-1]) == pytest.approx(hellinger_distance(p[::-1], p))
    assert hellinger_distance([2, 2], [1, 1]) == pytest.approx(0.0, abs=1e-8)
    assert hellinger_distance(np.full(10, 0.1), np.r_[np.full(8, 1 / 8), 0, 0]) == pytest.approx(
        math.sqrt(1 - 8 / math.sqrt(80)), abs=1e-12
    )
    with pytest.raises(ValueError):
        hellinger_distance([0.5, 0.5], [1.0])


def test_oracle_dropped():
    probs = oracle_mode_distribution(range(10), dropped=[8, 9])
    assert np.allclose(probs[:8], 1 / 8) and np.all(probs[8:] == 0)
    with pytest.raises(ValueError):
        oracle_mode_distribution([0, 1], dropped=[0, 1])


@pytest.mark.parametrize("rho, chance", [(0.1, 0.3249), (0.3, 0.1452), (0.5, 0.0)])
def test_oracle_imbalance(rho, chance):
    probs = oracle_mode_distribution(range(10), groups=[(range(5), rho), (range(5, 10), 1 - rho)])
    assert np.allclose(probs[:5], rho / 5) and np.allclose(probs[5:], (1 - rho) / 5)
    assert hellinger_distance(probs, np.full(10, 0.1)) == pytest.approx(chance, abs=1e-4)


def test_rank_samples():
    assert [i for i, _ in rank_samples([0.1, 0.2, 0.3], ["a", "b", "c"])] == ["a", "b", "c"]
    assert [i for i, _ in rank_samples([0.5, 0.1, 0.1], [0, 7, 3])] == [3, 7, 0]
    with pytest.raises(ValueError):
        bottom_k([0.5, 0.5], [0, 1], 3)
    assert zero_weight_ids([0.0, 0.5, 1e-15, 0.5], [0, 1, 2, 3]) == [0, 2]


def test_pr_perfect_separation():
    corrupted = np.array([True, False, True, False, False])
    w = np.where(corrupted, 0.0, 1 / 3)
    curve = pr_curve_from_weights(w, corrupted)
    assert curve.auc == pytest.approx(1.0)
    assert curve.points[-1][1] == 1.0


def test_pr_recall_monotone_and_endpoint():
    rng = np.random.default_rng(0)
    w = rng.uniform(size=200)
    y = rng.uniform(size=200) < 0.3
    curve = pr_curve_from_weights(w, y)
    recalls = [r for _, r in curve.points]
    assert all(b >= a for a, b in zip(recalls, recalls[1:]))
    assert recalls[-1] == 1.0
    assert 0.0 <= curve.auc <= 1.0


def test_pr_permutation_null():
    rng = np.random.default_rng(1)
    n = 1000
    y = np.zeros(n, bool)
    y[:300] = True
    w = rng.uniform(size=n)
    aucs = [pr_curve_from_weights(w, rng.permutation(y)).auc for _ in range(100)]
    assert np.mean(aucs) == pytest.approx(0.3, abs=0.02)


def test_pr_degenerate():
    with pytest.raises(ValueError):
        pr_curve_from_weights([0.1, 0.2], [True, True])


def test_mixture_balanced_and_deterministic():
    a = gen_gaussian_mixture(4, 10.0, [25] * 4, 6, seed=3)
    b = gen_gaussian_mixture(4, 10.0, [25] * 4, 6, seed=3)
    assert np.array_equal(a.features, b.features)
    assert np.bincount(a.labels).tolist() == [25] * 4
    with pytest.raises(ValueError):
        gen_gaussian_mixture(5, 1.0, [1] * 5, 4, seed=0)


def test_mixture_clt_bound():
    counts = [400, 900, 1600]
    fs = gen_gaussian_mixture(3, 10.0, counts, 5, seed=9)
    means = mixture_means(3, 10.0, 5)
    for k, c in enumerate(counts):
        err = np.abs(fs.features[fs.labels == k].mean(axis=0) - means[k])
        assert np.all(err <= 4 / math.sqrt(c))


def test_disjoint_block_fixture_geometry():
    test, model, mask = gen_disjoint_block_fixture(3, 2, 20, 30, seed=0)
    assert test.d == 5 and model.d == 5
    assert np.all(model.features[:, 3:] == 0)
    assert np.all(test.features[mask][:, 3:].max(axis=1) > 0)
    assert np.all(test.features >= 0)


def test_corrupt_labels():
    labels = np.repeat(np.arange(10), 10)
    new, mask = corrupt_labels(labels, 0.3, 10, seed=0)
    assert mask.sum() == 30
    assert np.all(new[mask] != labels[mask]) and np.all(new[~mask] == labels[~mask])
