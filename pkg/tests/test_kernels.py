import itertools
import json
import math

import numpy as np
import pytest

from geltest.kernels import (
    DeltaLabelKernel,
    ExponentialKernel,
    HierarchyPathKernel,
    LabelHierarchy,
    ProductKernel,
    Sample,
    eval_kernel,
    hierarchy_path_score,
    make_kernel,
    needs_labels,
)


def lcs_bruteforce(a, b):
    """Longest common subsequence by enumerating subsequences of the shorter input."""
    if len(a) > len(b):
        a, b = b, a
    for k in range(len(a), 0, -1):
        for idx in itertools.combinations(range(len(a)), k):
            sub = [a[i] for i in idx]
            it = iter(b)
            if all(any(x == y for y in it) for x in sub):
                return k
    return 0


def test_exponential_zero_vectors():
    k = ExponentialKernel(3)
    assert eval_kernel(k, Sample(np.zeros(3)), Sample(np.zeros(3))) == 1.0


def test_exponential_ones_d2():
    k = ExponentialKernel(2)
    val = eval_kernel(k, Sample(np.ones(2)), Sample(np.ones(2)))
    assert val == pytest.approx(math.e, abs=1e-9)


def test_product_delta_different_labels_is_zero():
    k = ProductKernel(ExponentialKernel(2), DeltaLabelKernel())
    x = np.array([0.3, -0.2])
    assert eval_kernel(k, Sample(x, 1), Sample(x, 2)) == 0.0
    assert eval_kernel(k, Sample(x, 1), Sample(x, 1)) == pytest.approx(math.exp(x @ x / 2))


def test_exponential_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        ExponentialKernel(3).gram(np.zeros((2, 2)), np.zeros((2, 2)))


@pytest.mark.parametrize("kernel", [DeltaLabelKernel(), ProductKernel(ExponentialKernel(2), DeltaLabelKernel())])
def test_label_kernels_need_labels(kernel):
    with pytest.raises(ValueError):
        eval_kernel(kernel, Sample(np.zeros(2)), Sample(np.zeros(2), 1))


def test_product_rejects_bad_factors():
    with pytest.raises((TypeError, ValueError)):
        ProductKernel(DeltaLabelKernel(), ExponentialKernel(2))


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (list("abcdefghijk"), list("abcdefghijk"), 11),
        (list("abcd"), list("abed"), 3),
        ([], list("abc"), 0),
        (list("abc"), [], 0),
        (list("xyz"), list("abc"), 0),
    ],
)
def test_hierarchy_score_examples(a, b, expected):
    assert hierarchy_path_score(a, b) == expected


def test_hierarchy_score_matches_lcs_on_random_pairs():
    rng = np.random.default_rng(11)
    alphabet = list("abcdef")
    for _ in range(1000):
        a = list(rng.choice(alphabet, size=rng.integers(0, 13)))
        b = list(rng.choice(alphabet, size=rng.integers(0, 13)))
        score = hierarchy_path_score(a, b)
        assert score == lcs_bruteforce(a, b)
        assert score <= min(len(a), len(b))
        assert hierarchy_path_score(a, a) == len(a)


def _toy_hierarchy():
    return LabelHierarchy(
        {
            "cat": ["entity", "animal", "mammal", "cat"],
            "dog": ["entity", "animal", "mammal", "dog"],
            "car": ["entity", "artifact", "car"],
        }
    )


def test_hierarchy_kernel_values():
    k = HierarchyPathKernel(_toy_hierarchy())
    g = k.gram(np.zeros((3, 1)), np.zeros((3, 1)), ["cat", "dog", "car"], ["cat", "dog", "car"])
    assert g.tolist() == [[4, 3, 1], [3, 4, 1], [1, 1, 3]]


def test_hierarchy_validation():
    with pytest.raises(ValueError):
        LabelHierarchy({"cat": []})
    with pytest.raises(ValueError):
        LabelHierarchy({"cat": ["entity", "dog"]})


def test_hierarchy_json_roundtrip(tmp_path):
    h = _toy_hierarchy()
    path = tmp_path / "h.json"
    path.write_text(json.dumps(h.to_json()))
    assert LabelHierarchy.from_json(path).paths == h.paths


def test_hierarchy_int_labels_lookup():
    h = LabelHierarchy({"3": ["root", "3"]})
    assert h.path(3) == ("root", "3")


@pytest.mark.parametrize("name", ["exponential", "product-delta", "product-hierarchy"])
def test_make_kernel(name):
    k = make_kernel(name, 4, _toy_hierarchy())
    assert needs_labels(k) == (name != "exponential")


def test_make_kernel_unknown():
    with pytest.raises(ValueError):
        make_kernel("gaussian", 2)
    with pytest.raises(ValueError):
        make_kernel("product-hierarchy", 2)
