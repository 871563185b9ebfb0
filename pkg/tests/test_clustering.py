from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rpspectral.clustering import (
    KmeansConfig,
    ari,
    kmeans,
    pair_confusion,
    spectral_oracle,
)
from rpspectral.datasets import SyntheticSpec, generate_synthetic
from rpspectral.errors import KTooLarge, LengthMismatch, TooFewPoints, TooLarge


def enumerate_confusion(first, second):
    """Literal definition: walk every unordered pair and bucket it."""
    counts = [0, 0, 0, 0]  # both, first only, second only, neither
    for i, j in combinations(range(len(first)), 2):
        a = first[i] == first[j]
        b = second[i] == second[j]
        if a and b:
            counts[0] += 1
        elif a:
            counts[1] += 1
        elif b:
            counts[2] += 1
        else:
            counts[3] += 1
    return tuple(counts)


def ari_from_enumeration(first, second):
    """Adjusted Rand index in exact rational arithmetic from pair buckets,
    using the expected-index form rather than the confusion-matrix form."""
    n11, n10, n01, n00 = enumerate_confusion(first, second)
    total = n11 + n10 + n01 + n00
    index = Fraction(n11)
    expected = Fraction((n11 + n10) * (n11 + n01), total)
    maximum = Fraction(n11 + n10 + n11 + n01, 2)
    if maximum == expected:
        return None
    return (index - expected) / (maximum - expected)


label_lists = st.integers(2, 12).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
    )
)


def test_identity_labeling_scores_one():
    labels = [0, 0, 1, 1, 2, 2]
    assert ari(labels, labels) == 1.0
    # relabeling does not matter
    assert ari(labels, [5, 5, 9, 9, 7, 7]) == 1.0


def test_crossed_pairs_score_minus_half():
    assert ari([0, 0, 1, 1], [0, 1, 0, 1]) == -0.5


def test_undefined_cases_return_none():
    assert ari([0, 0, 0], [1, 1, 1]) is None  # both constant
    assert ari([0, 1, 2], [2, 0, 1]) is None  # both all-singletons
    # one-sided constant is defined (and zero: no information)
    assert ari([0, 0, 0, 0], [0, 0, 1, 1]) == 0.0


def test_pair_confusion_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 12))
        first = rng.integers(0, 4, size=n)
        second = rng.integers(0, 4, size=n)
        c = pair_confusion(first, second)
        assert (
            c.together_both,
            c.together_first,
            c.together_second,
            c.together_neither,
        ) == enumerate_confusion(first, second)
        assert c.total == n * (n - 1) // 2
        assert all(
            isinstance(v, int)
            for v in (c.together_both, c.together_first, c.together_second)
        )


@settings(max_examples=200, deadline=None)
@given(label_lists)
def test_ari_agrees_with_exact_enumeration(pair):
    first, second = pair
    fast = ari(first, second)
    slow = ari_from_enumeration(first, second)
    if slow is None:
        assert fast is None
    else:
        assert abs(fast - float(slow)) < 1e-12
    # symmetry in the two labelings
    assert ari(second, first) == fast


def test_pair_confusion_input_errors():
    with pytest.raises(LengthMismatch):
        pair_confusion([0, 1], [0, 1, 2])
    with pytest.raises(TooFewPoints):
        pair_confusion([0], [0])


def test_labels_accept_strings():
    assert ari(["a", "a", "b", "b"], [0, 0, 1, 1]) == 1.0


# --- kmeans ---


def test_kmeans_recovers_separated_blobs():
    X, y = generate_synthetic(SyntheticSpec(kind="blobs", n=150, noise=0.05, seed=0))
    result = kmeans(X, KmeansConfig(k=3, seed=0))
    assert ari(y, result.labels) == 1.0
    assert result.centers.shape == (3, 2)
    assert result.inertia >= 0.0


def test_kmeans_two_points():
    result = kmeans(np.array([[0.0], [1.0]]), KmeansConfig(k=2, seed=0))
    assert set(result.labels.tolist()) == {0, 1}
    assert result.inertia == 0.0


def test_kmeans_k_one_center_is_mean():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 2))
    result = kmeans(X, KmeansConfig(k=1, seed=0))
    assert not result.labels.any()
    assert np.allclose(result.centers[0], X.mean(axis=0))


def test_kmeans_is_deterministic():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 2))
    a = kmeans(X, KmeansConfig(k=4, seed=7))
    b = kmeans(X, KmeansConfig(k=4, seed=7))
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.centers, b.centers)
    assert a.inertia == b.inertia


def test_kmeans_restarts_never_hurt():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 2))
    single = kmeans(X, KmeansConfig(k=5, restarts=1, seed=0))
    many = kmeans(X, KmeansConfig(k=5, restarts=10, seed=0))
    assert many.inertia <= single.inertia + 1e-12


def test_kmeans_inertia_is_true_scatter():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(40, 3))
    result = kmeans(X, KmeansConfig(k=3, seed=1))
    scatter = sum(
        np.sum((X[i] - result.centers[result.labels[i]]) ** 2) for i in range(40)
    )
    assert result.inertia == pytest.approx(scatter, rel=1e-12)


def test_kmeans_errors():
    X = np.zeros((3, 2))
    with pytest.raises(KTooLarge):
        kmeans(X, KmeansConfig(k=4))
    with pytest.raises(ValueError):
        KmeansConfig(k=0).validate()
    with pytest.raises(ValueError):
        KmeansConfig(k=2, restarts=0).validate()


# --- dense spectral reference ---


def test_oracle_recovers_blobs():
    X, y = generate_synthetic(SyntheticSpec(kind="blobs", n=150, noise=0.05, seed=1))
    labels = spectral_oracle(X, 3)
    assert ari(y, labels) == 1.0


def test_oracle_is_deterministic():
    X, _ = generate_synthetic(SyntheticSpec(kind="blobs", n=90, noise=0.1, seed=2))
    assert np.array_equal(spectral_oracle(X, 3, seed=4), spectral_oracle(X, 3, seed=4))


def test_oracle_size_guards():
    with pytest.raises(TooLarge):
        spectral_oracle(np.zeros((2001, 2)), 2)
    with pytest.raises(KTooLarge):
        spectral_oracle(np.zeros((5, 2)), 6)


def test_oracle_accepts_explicit_bandwidth():
    X, y = generate_synthetic(SyntheticSpec(kind="blobs", n=120, noise=0.05, seed=3))
    labels = spectral_oracle(X, 3, bandwidth=0.5)
    assert ari(y, labels) == 1.0
