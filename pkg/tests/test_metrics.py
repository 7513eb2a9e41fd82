import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import adjusted_rand_score

from htkmeans import DataError, PenaltySpec, adjusted_rand_index, penalized_objective, wcss
from htkmeans.metrics import center_column_norms, contingency


def test_wcss_hand_value():
    x = np.array([[0.0, 0.0], [2.0, 0.0], [10.0, 1.0]])
    centers = np.array([[1.0, 0.0], [10.0, 0.0]])
    # residuals: 1, 1, 1 (second column of the third point)
    assert wcss(x, centers, np.array([0, 0, 1])) == pytest.approx(1.0)


def test_wcss_zero_column_counts_full_second_moment():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((20, 3))
    centers = np.zeros((2, 3))
    assert wcss(x, centers, rng.integers(0, 2, 20)) == pytest.approx((x**2).sum() / 20)


def test_wcss_validates_shapes():
    x = np.zeros((4, 2))
    with pytest.raises(DataError):
        wcss(x, np.zeros((2, 3)), np.zeros(4, dtype=int))
    with pytest.raises(DataError):
        wcss(x, np.zeros((2, 2)), np.array([0, 1, 2, 0]))


def test_penalized_objective_families():
    x = np.array([[1.0, 0.0], [3.0, 0.0]])
    centers = np.array([[2.0, 0.0]])
    labels = np.zeros(2, dtype=int)
    base = 1.0
    assert penalized_objective(x, centers, labels, PenaltySpec("ht", 0.5)) == pytest.approx(base + 0.5)
    assert penalized_objective(x, centers, labels, PenaltySpec("lasso", 0.5)) == pytest.approx(base + 1.0)
    assert penalized_objective(x, centers, labels, PenaltySpec("ridge", 0.5)) == pytest.approx(base + 2.0)
    assert penalized_objective(x, centers, labels, PenaltySpec("glasso", 0.5)) == pytest.approx(base + 1.0)


def test_center_column_norms():
    np.testing.assert_allclose(center_column_norms([[3.0, 0.0], [4.0, 0.0]]), [5.0, 0.0])


def test_ari_known_values():
    a = [0, 0, 1, 1]
    assert adjusted_rand_index(a, a) == 1.0
    assert adjusted_rand_index(a, [5, 5, 2, 2]) == 1.0
    # hand computation: one co-clustered pair shared, expected index 1/3
    assert adjusted_rand_index([0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 2, 2]) == pytest.approx(
        adjusted_rand_score([0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 2, 2])
    )
    assert adjusted_rand_index([0, 0, 0, 0], [0, 0, 0, 0]) == 1.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 4)), min_size=2, max_size=40))
def test_ari_matches_sklearn(pairs):
    a, b = zip(*pairs)
    assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_score(a, b), abs=1e-12)


def test_ari_requires_two_points():
    with pytest.raises(DataError):
        adjusted_rand_index([1], [1])


def test_contingency_counts():
    table = contingency([1, 1, 2, 2, 2], ["a", "b", "b", "b", "a"])
    np.testing.assert_array_equal(table, [[1, 1], [1, 2]])
    assert table.sum() == 5
    with pytest.raises(DataError):
        contingency([1, 2], [1])


def test_ari_symmetric_and_label_invariant():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.integers(0, 3, 30)
        b = rng.integers(0, 4, 30)
        perm = rng.permutation(4)
        assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_index(b, a))
        assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_index(a, perm[b]))
