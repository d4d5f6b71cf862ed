import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlridge.estimators import (
    ConstraintKind,
    EstimatorConfig,
    aggregation_weights,
    fallback_alpha_sq,
    risk_value,
    step1_weights,
    step2_weights,
    ure_value,
)
from nlridge.noise import GaussianHomo, Poisson, d1_matrix, d2_matrix
from nlridge.qp import active_set_oracle, objective

LIN, AFF = EstimatorConfig("linear"), EstimatorConfig("affine")


def column_kkt_oracle(Q, G, affine):
    """Minimize sum_j t_j'Q t_j + 2 g_j't_j column by column, optionally with 1't_j = 1.

    Solves the bordered KKT system for each column directly.
    """
    k = Q.shape[0]
    out = np.empty((k, G.shape[1]))
    for j in range(G.shape[1]):
        if affine:
            K = np.block([[2 * Q, np.ones((k, 1))], [np.ones((1, k)), np.zeros((1, 1))]])
            out[:, j] = np.linalg.solve(K, np.concatenate([-2 * G[:, j], [1.0]]))[:k]
        else:
            out[:, j] = np.linalg.solve(Q, -G[:, j])
    return out


def ure_parts(Y, d):
    Q = Y.T @ Y
    return Q, -Q + np.diag(d)


def risk_parts(X, d):
    return X.T @ X + np.diag(d), -(X.T @ X)


def random_instance(rng, n=None, k=None):
    k = k or int(rng.integers(1, 9))
    n = n or int(rng.integers(k + 1, 3 * k + 4))
    Y = rng.uniform(0, 5, (n, k)) + rng.standard_normal((n, k))
    d = rng.uniform(0.1, 4, k) * n
    return Y, d


def test_ure_examples():
    rng = np.random.default_rng(0)
    Y = rng.standard_normal((6, 3))
    d = np.array([1.0, 2.0, 5.0])
    assert ure_value(np.eye(3), Y, d) == pytest.approx(d.sum())
    assert ure_value(np.zeros((3, 3)), Y, d) == pytest.approx(np.sum(Y**2) - d.sum())
    sigma = 3.0
    assert ure_value(np.eye(3), Y, d1_matrix(Y, GaussianHomo(sigma))) == pytest.approx(6 * 3 * sigma**2)


def test_risk_examples():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((5, 4))
    d = np.array([1.0, 2.0, 3.0, 4.0])
    assert risk_value(np.zeros((4, 4)), X, d) == pytest.approx(np.sum(X**2))
    assert risk_value(np.eye(4), X, d) == pytest.approx(10.0)
    T = rng.standard_normal((4, 4))
    sigma = 2.0
    ridge = np.sum((X @ T - X) ** 2) + 5 * sigma**2 * np.sum(T**2)
    assert risk_value(T, X, d2_matrix(X, GaussianHomo(sigma))) == pytest.approx(ridge)


def test_step1_examples():
    Y = 2.0 * np.eye(2)
    np.testing.assert_allclose(step1_weights(Y, d1_matrix(Y, GaussianHomo(1.0)), LIN), 0.5 * np.eye(2), atol=1e-15)
    rng = np.random.default_rng(2)
    Y = rng.uniform(10, 50, (9, 4))
    np.testing.assert_allclose(step1_weights(Y, np.full(4, 9e-18), LIN), np.eye(4), atol=1e-12)
    np.testing.assert_array_equal(step1_weights(rng.standard_normal((5, 1)), np.array([3.0]), AFF), [[1.0]])


def test_step1_matches_numeric_minimum():
    # Y = 2I: the linear optimum of the URE, found by a generic minimizer
    import scipy.optimize

    Y, d = 2.0 * np.eye(2), np.array([2.0, 2.0])
    res = scipy.optimize.minimize(lambda t: ure_value(t.reshape(2, 2), Y, d), np.zeros(4), method="BFGS", tol=1e-12)
    np.testing.assert_allclose(step1_weights(Y, d, LIN), res.x.reshape(2, 2), atol=1e-6)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**31), affine=st.booleans(), step=st.sampled_from([1, 2]))
def test_closed_forms_match_kkt_oracle(seed, affine, step):
    rng = np.random.default_rng(seed)
    Y, d = random_instance(rng)
    cfg = AFF if affine else LIN
    if step == 1:
        theta = step1_weights(Y, d, cfg)
        ref = column_kkt_oracle(*ure_parts(Y, d), affine)
    else:
        theta = step2_weights(Y, d, cfg)
        ref = column_kkt_oracle(*risk_parts(Y, d), affine)
    np.testing.assert_allclose(theta, ref, atol=1e-8 * (1 + np.abs(ref).max()))
    if affine:
        np.testing.assert_allclose(theta.sum(axis=0), 1.0, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), kind=st.sampled_from(["conical", "convex"]), step=st.sampled_from([1, 2]))
def test_cone_regimes_match_active_set_oracle(seed, kind, step):
    rng = np.random.default_rng(seed)
    Y, d = random_instance(rng, k=int(rng.integers(1, 7)))
    cfg = EstimatorConfig(kind, scd_iters=200, seed=seed)
    theta = step1_weights(Y, d, cfg) if step == 1 else step2_weights(Y, d, cfg)
    Q = Y.T @ Y + (0 if step == 1 else np.diag(d))
    C = np.diag(d) - Q
    for j in range(Y.shape[1]):
        best = objective(Q, C[:, j], active_set_oracle(Q, C[:, j], kind))
        assert objective(Q, C[:, j], theta[:, j]) - best <= 1e-6 * (1 + abs(best))
    assert theta.min() >= -1e-12
    if kind == "convex":
        np.testing.assert_allclose(theta.sum(axis=0), 1.0, atol=1e-12)


def test_noisier_limit():
    rng = np.random.default_rng(3)
    Y, d = random_instance(rng, n=20, k=6)
    base = step1_weights(Y, d, LIN)
    gaps = [np.abs(step1_weights(Y, d, EstimatorConfig("linear", a)) - base).max() for a in (1e-1, 1e-3)]
    assert gaps[1] < gaps[0] and gaps[1] < 1e-4


def test_noisier_formula():
    rng = np.random.default_rng(4)
    Y, d = random_instance(rng, n=12, k=5)
    a = 0.7
    n = Y.shape[0]
    Q = Y.T @ Y + a**2 * n * np.eye(5)
    expected = np.eye(5) - np.linalg.solve(Q, np.diag(d) + a**2 * n * np.eye(5))
    np.testing.assert_allclose(step1_weights(Y, d, EstimatorConfig("linear", a)), expected, atol=1e-12)


def test_rank_deficient_group_falls_back():
    # k > n makes Y'Y singular
    rng = np.random.default_rng(5)
    Y = rng.standard_normal((3, 6))
    d = np.full(6, 3.0)
    theta = step1_weights(Y, d, LIN)
    a2 = fallback_alpha_sq(Y)
    Q = Y.T @ Y + a2 * 3 * np.eye(6)
    np.testing.assert_allclose(theta, np.eye(6) - np.linalg.solve(Q, np.diag(d + a2 * 3)), atol=1e-6)
    assert np.all(np.isfinite(step1_weights(np.zeros((4, 3)), np.full(3, 4.0), AFF)))
    assert fallback_alpha_sq(np.zeros((4, 3))) == 1.0


def test_step2_examples():
    theta = step2_weights(np.zeros((4, 3)), d2_matrix(np.zeros((4, 3)), GaussianHomo(2.0)), LIN)
    np.testing.assert_allclose(theta, 0.0, atol=1e-15)
    Xhat = np.zeros((4, 3))
    np.testing.assert_array_equal(step2_weights(Xhat, d2_matrix(Xhat, Poisson()), LIN), np.eye(3))


def test_step2_asymptotics():
    X = np.arange(15.0).reshape(5, 3) + 1
    d = d2_matrix(X, GaussianHomo(1e6))
    assert np.abs(step2_weights(X, d, AFF) - 1 / 3).max() <= 1e-6
    assert np.abs(step2_weights(X, d, LIN)).max() <= 1e-6


def test_batched_equals_single():
    rng = np.random.default_rng(6)
    Ys = rng.standard_normal((5, 10, 4)) + 3
    ds = rng.uniform(1, 10, (5, 4))
    for cfg in (LIN, AFF, EstimatorConfig("conical"), EstimatorConfig("convex")):
        batch1 = step1_weights(Ys, ds, cfg, rng=0)
        batch2 = step2_weights(Ys, ds, cfg, rng=0)
        for i in range(5):
            if cfg.constraint in (ConstraintKind.LINEAR, ConstraintKind.AFFINE):
                np.testing.assert_allclose(batch1[i], step1_weights(Ys[i], ds[i], cfg), atol=1e-12)
                np.testing.assert_allclose(batch2[i], step2_weights(Ys[i], ds[i], cfg), atol=1e-12)
        assert batch1.shape == (5, 4, 4)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), shift=st.floats(-50, 50))
def test_affine_shift_equivariance(seed, shift):
    rng = np.random.default_rng(seed)
    Y = rng.uniform(0, 10, (12, 5))
    d = d1_matrix(Y, GaussianHomo(2.0))
    out = Y @ step1_weights(Y, d, AFF)
    Ys = Y + shift
    out_s = Ys @ step1_weights(Ys, d, AFF)
    np.testing.assert_allclose(out_s, out + shift, atol=1e-6)


def test_aggregation_weight_examples():
    np.testing.assert_allclose(aggregation_weights(np.eye(4)), 1.0)
    np.testing.assert_allclose(aggregation_weights(np.full((5, 5), 0.2)), 5.0)
    np.testing.assert_allclose(aggregation_weights(np.array([[0.6, 0.0], [0.8, 0.0]])), [1.0, 1e6])


def test_alpha_must_be_nonnegative():
    with pytest.raises(ValueError):
        EstimatorConfig("linear", -1.0)
