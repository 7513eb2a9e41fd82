import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from htkmeans import ConfigError, EmptyClusterError, Family, PenaltySpec, update_centers
from htkmeans.penalties import cluster_means, column_lambdas, penalty_term, penalty_value


def _objective(x, labels, centers, lam, family):
    resid = x - centers[labels]
    fit = (resid**2).sum() / x.shape[0]
    if family == "ht":
        pen = np.any(centers != 0, axis=0).sum()
    elif family == "lasso":
        pen = np.abs(centers).sum()
    elif family == "ridge":
        pen = (centers**2).sum()
    else:
        pen = np.sqrt((centers**2).sum(axis=0)).sum()
    return fit + lam * pen


def test_family_parse_aliases():
    assert Family.parse("HT") is Family.HT
    assert Family.parse("group_lasso") is Family.GLASSO
    with pytest.raises(ConfigError):
        Family.parse("elastic")


def test_negative_lambda_rejected():
    with pytest.raises(ConfigError):
        PenaltySpec("ht", -1.0)


def test_cluster_means_empty_cluster():
    with pytest.raises(EmptyClusterError):
        cluster_means(np.zeros((3, 2)), np.array([0, 0, 2]), 3)


def test_lambda_zero_gives_cluster_means():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((10, 3))
    labels = np.arange(10) % 2
    expected = np.array([x[labels == k].mean(axis=0) for k in range(2)])
    for family in Family:
        np.testing.assert_allclose(update_centers(PenaltySpec(family, 0.0), x, labels, 2), expected)


def test_ht_keeps_or_zeroes_whole_columns():
    x = np.array([[-1.0, 0.1], [-1.0, -0.1], [1.0, 0.1], [1.0, -0.1]])
    labels = np.array([0, 0, 1, 1])
    mu = update_centers(PenaltySpec("ht", 0.5), x, labels, 2)
    # column 1 reduces WCSS by 1.0 > 0.5; column 2 by 0
    np.testing.assert_allclose(mu, [[-1.0, 0.0], [1.0, 0.0]])
    mu = update_centers(PenaltySpec("ht", 1.0), x, labels, 2)
    assert not mu.any()  # strict inequality: tie zeroes the column


def test_lasso_soft_threshold_hand_value():
    x = np.array([[2.0], [2.0], [-1.0], [-1.0]])
    labels = np.array([0, 0, 1, 1])
    mu = update_centers(PenaltySpec("lasso", 0.5), x, labels, 2)
    # threshold n * lam / (2 |C_k|) = 0.5
    np.testing.assert_allclose(mu, [[1.5], [-0.5]])


def test_ridge_shrink_hand_value():
    x = np.array([[2.0], [2.0], [-1.0], [-1.0]])
    labels = np.array([0, 0, 1, 1])
    mu = update_centers(PenaltySpec("ridge", 0.5), x, labels, 2)
    np.testing.assert_allclose(mu, [[1.0], [-0.5]])


def test_group_lasso_zero_threshold_is_exact():
    x = np.array([[1.0], [1.0], [-1.0], [-1.0]])
    labels = np.array([0, 0, 1, 1])
    # gradient norm at zero: ||2 w m|| = sqrt(2)
    assert not update_centers(PenaltySpec("glasso", np.sqrt(2) + 1e-12), x, labels, 2).any()
    assert update_centers(PenaltySpec("glasso", np.sqrt(2) - 1e-6), x, labels, 2).any()


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 10_000),
    st.sampled_from(["ht", "lasso", "ridge", "glasso"]),
    st.floats(1e-3, 3.0),
)
def test_update_beats_local_perturbations(seed, family, lam):
    rng = np.random.default_rng(seed)
    K, n, p = 3, 15, 4
    x = rng.standard_normal((n, p)) + rng.integers(0, K, n)[:, None]
    labels = np.concatenate([np.arange(K), rng.integers(0, K, n - K)])
    mu = update_centers(PenaltySpec(family, lam), x, labels, K)
    best = _objective(x, labels, mu, lam, family)
    for _ in range(30):
        trial = mu + rng.normal(scale=0.05, size=mu.shape) * (rng.random(mu.shape) < 0.5)
        assert _objective(x, labels, trial, lam, family) >= best - 1e-12


@pytest.mark.parametrize("family", ["lasso", "ridge", "glasso"])
def test_convex_update_matches_numeric_minimum(family):
    rng = np.random.default_rng(3)
    K, n, p = 2, 12, 2
    x = rng.standard_normal((n, p)) * 2
    labels = np.arange(n) % K
    lam = 0.3
    mu = update_centers(PenaltySpec(family, lam), x, labels, K)
    res = minimize(
        lambda v: _objective(x, labels, v.reshape(K, p), lam, family),
        np.zeros(K * p) + 0.1,
        method="Powell",
        options={"xtol": 1e-12, "ftol": 1e-14, "maxiter": 100000},
    )
    assert _objective(x, labels, mu, lam, family) <= res.fun + 1e-9


def test_adaptive_weights_and_penalty():
    x = np.array([[2.0, 0.0], [2.0, 0.0], [-2.0, 0.0], [-2.0, 0.0]])
    labels = np.array([0, 0, 1, 1])
    spec = PenaltySpec("lasso", 0.5, adaptive=True)
    means = cluster_means(x, labels, 2)
    lam = column_lambdas(spec, means)
    assert lam[0] == pytest.approx(0.5 / np.sqrt(8))
    assert np.isinf(lam[1])
    mu = update_centers(spec, x, labels, 2)
    assert not mu[:, 1].any()
    assert penalty_term(spec, x, mu, labels) == pytest.approx(lam[0] * np.abs(mu[:, 0]).sum())


def test_penalty_value_unscaled():
    centers = np.array([[3.0, 0.0], [-4.0, 0.0]])
    assert penalty_value(PenaltySpec("ht", 9.0), centers) == 1
    assert penalty_value(PenaltySpec("lasso", 9.0), centers) == 7
    assert penalty_value(PenaltySpec("ridge", 9.0), centers) == 25
    assert penalty_value(PenaltySpec("glasso", 9.0), centers) == 5
