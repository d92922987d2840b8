import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carcensus.estimator import (
    RidgeModel, SoftmaxModel, Standardizer, apply_standardizer, cross_entropy, cv_train,
    fit_ridge, fit_softmax, fit_standardizer, fold_assignment, load_models, predict,
    ridge_stationarity, save_models, softmax, softmax_loss_grad,
)
from carcensus.oracles import oracle_ridge

X5 = [[1, 2, 0], [0, 1, 3], [2, 2, 1], [1, 0, 1], [3, 1, 2]]
Y5 = [1.0, 2.0, 0.5, -1.0, 3.0]


def test_standardizer_examples():
    S = fit_standardizer(np.array([[1.0, 5.0], [3.0, 5.0]]))
    assert S.mean[0] == 2.0 and S.std[0] == 1.0
    assert apply_standardizer(S, np.array([[1.0, 5.0], [3.0, 5.0]])).tolist() == [[-1.0, 0.0], [1.0, 0.0]]
    S3 = fit_standardizer(np.array([[5.0], [5.0], [5.0]]))
    assert S3.std[0] == 1.0
    assert S3.transform(np.array([[5.0], [5.0], [5.0]])).ravel().tolist() == [0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        fit_standardizer(np.ones((1, 3)))
    with pytest.raises(ValueError):
        Standardizer(np.zeros(2), np.array([1.0, 0.0]))


def test_standardized_columns_have_zero_mean():
    X = np.random.default_rng(0).normal(3, 7, size=(40, 6))
    Z = fit_standardizer(X).transform(X)
    assert np.max(np.abs(Z.mean(axis=0))) < 1e-12


def test_ridge_frozen_oracle_values():
    w, b = oracle_ridge(X5, Y5, 1.0)
    assert w == pytest.approx([0.4165390505359877, 0.5980091883614089, 0.8016845329249617], abs=1e-15)
    assert b == pytest.approx(-1.3231240428790199, abs=1e-15)
    m = fit_ridge(np.array(X5, dtype=float), np.array(Y5), 1.0)
    np.testing.assert_allclose(m.weights, w, atol=1e-12)
    assert m.intercept == pytest.approx(b, abs=1e-12)


def test_oracle_identity_design():
    y = [3.0, -1.0, 4.0]
    with pytest.raises(ValueError, match="singular"):
        oracle_ridge(np.eye(3).tolist(), y, 0.0)
    # identity design with an intercept is collinear; the closed form
    # weights = y - mean(y), intercept = mean(y) is the minimum-norm solution,
    # which any lambda > 0 approaches as lambda -> 0
    w, b = oracle_ridge(np.eye(3).tolist(), y, 1e-9)
    np.testing.assert_allclose(w, np.array(y) - np.mean(y), atol=1e-6)
    assert b == pytest.approx(np.mean(y), abs=1e-6)


def test_ridge_recovers_exact_linear_data():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 5))
    w = rng.normal(size=5)
    m = fit_ridge(X, X @ w + 0.7, 0.0)
    np.testing.assert_allclose(m.weights, w, atol=1e-8)
    assert m.intercept == pytest.approx(0.7, abs=1e-8)


def test_ridge_large_lambda_predicts_mean():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(20, 4))
    y = rng.normal(size=20)
    m = fit_ridge(X, y, 1e9)
    assert np.max(np.abs(m.weights)) < 1e-6
    np.testing.assert_allclose(m.raw(X), y.mean(), atol=1e-6)


def test_ridge_singular_at_zero_lambda():
    X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(np.linalg.LinAlgError, match="lambda > 0"):
        fit_ridge(X, np.array([1.0, 2.0, 3.0]), 0.0)
    fit_ridge(X, np.array([1.0, 2.0, 3.0]), 0.1)


def test_ridge_clipping():
    m = RidgeModel(np.array([1.0]), 0.0, 1.0, Standardizer.identity(1), -1.0, 2.0)
    assert predict(m, np.array([5.0])) == 2.0
    assert predict(m, np.array([0.5])) == 0.5
    assert predict(m, np.array([-9.0])) == -1.0
    with pytest.raises(ValueError):
        predict(m, np.array([1.0, 2.0]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.01, 1.0, 100.0]))
def test_ridge_matches_oracle_and_is_stationary(seed, lam):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(2, 30)), int(rng.integers(1, 8))
    X = rng.normal(size=(n, d))
    y = rng.normal(size=n) * 3
    m = fit_ridge(X, y, lam)
    w, b = oracle_ridge(X.tolist(), y.tolist(), lam)
    np.testing.assert_allclose(m.weights, w, atol=1e-8)
    assert abs(m.intercept - b) < 1e-8
    assert ridge_stationarity(X, y, m) < 1e-6
    assert np.all((m.predict(rng.normal(size=(10, d)) * 10) >= y.min()) &
                  (m.predict(rng.normal(size=(10, d)) * 10) <= y.max()))


def test_softmax_zero_weights_uniform():
    m = SoftmaxModel(np.zeros((4, 3)), np.zeros(4), 0.0, Standardizer.identity(3))
    np.testing.assert_allclose(m.predict(np.array([[1.0, -2.0, 3.0]])), 0.25)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_softmax_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n, d, K = int(rng.integers(3, 15)), int(rng.integers(1, 10)), int(rng.integers(2, 6))
    X = rng.normal(size=(n, d))
    Y = rng.dirichlet(np.ones(K), size=n)
    W = rng.normal(size=(K, d))
    b = rng.normal(size=K)
    lam = float(rng.choice([0.0, 0.1, 2.0]))
    _, gW, gb = softmax_loss_grad(W, b, X, Y, lam)
    h = 1e-5
    num = np.zeros_like(W)
    for i in np.ndindex(W.shape):
        Wp, Wm = W.copy(), W.copy()
        Wp[i] += h
        Wm[i] -= h
        num[i] = (softmax_loss_grad(Wp, b, X, Y, lam)[0] - softmax_loss_grad(Wm, b, X, Y, lam)[0]) / (2 * h)
    numb = np.array([(softmax_loss_grad(W, b + h * e, X, Y, lam)[0] -
                      softmax_loss_grad(W, b - h * e, X, Y, lam)[0]) / (2 * h) for e in np.eye(K)])
    ana = np.concatenate([gW.ravel(), gb])
    fd = np.concatenate([num.ravel(), numb])
    assert np.linalg.norm(ana - fd) / max(np.linalg.norm(fd), 1e-8) < 1e-4


def test_softmax_recovers_noiseless_model():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(300, 6))
    Wt = rng.normal(size=(4, 6))
    Y = softmax(X @ Wt.T)
    m = fit_softmax(X, Y, 1e-6)
    assert m.converged
    P = m.predict(X)
    for k in range(4):
        assert np.corrcoef(P[:, k], Y[:, k])[0, 1] >= 0.99
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)


def test_softmax_large_lambda_gives_base_rates():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(50, 3))
    Y = rng.dirichlet(np.ones(3), size=50)
    m = fit_softmax(X, Y, 1e9)
    np.testing.assert_allclose(m.predict(X), np.tile(Y.mean(axis=0), (50, 1)), atol=1e-6)


def test_softmax_input_errors():
    with pytest.raises(ValueError, match="simplex"):
        fit_softmax(np.ones((2, 2)), np.array([[0.5, 0.6], [0.5, 0.5]]), 1.0)
    with pytest.raises(ValueError, match="NaN"):
        fit_softmax(np.array([[np.nan, 1.0], [1.0, 1.0]]), np.array([[0.5, 0.5], [0.5, 0.5]]), 1.0)


def test_softmax_predictions_on_simplex():
    rng = np.random.default_rng(6)
    m = SoftmaxModel(rng.normal(size=(5, 4)) * 20, rng.normal(size=5), 0.0, Standardizer.identity(4))
    P = m.predict(rng.normal(size=(100, 4)))
    assert np.all(P >= 0)
    assert np.max(np.abs(P.sum(axis=1) - 1)) <= 1e-9


def test_fold_assignment_balanced_and_deterministic():
    a = fold_assignment(23, 5, seed=9)
    assert np.array_equal(a, fold_assignment(23, 5, seed=9))
    assert sorted(np.bincount(a).tolist()) == [4, 4, 5, 5, 5]
    assert not np.array_equal(a, fold_assignment(23, 5, seed=10))


def _linear_data(seed=0, n=60, d=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = X @ rng.normal(size=d) + rng.normal(scale=0.5, size=n)
    return X, y


def test_cv_single_lambda_averages_fold_models():
    X, y = _linear_data()
    res = cv_train(X, y, "ridge", (1.0,), folds=5, seed=0)
    assert res.lam == 1.0
    np.testing.assert_allclose(res.model.weights, np.mean([m.weights for m in res.fold_models], axis=0))
    probe = np.random.default_rng(1).normal(size=(7, 5))
    np.testing.assert_allclose(res.model.raw(probe), np.mean([m.raw(probe) for m in res.fold_models], axis=0))


def test_cv_selects_minimal_heldout_mse():
    X, y = _linear_data(3)
    grid = (0.01, 1.0, 100.0)
    res = cv_train(X, y, "ridge", grid, folds=5, seed=2)
    Z = fit_standardizer(X).transform(X)
    recomputed = {}
    for lam in grid:
        losses = []
        for k in range(5):
            tr, te = res.fold_ids != k, res.fold_ids == k
            m = fit_ridge(Z[tr], y[tr], lam * tr.sum())
            losses.append(np.mean((Z[te] @ m.weights + m.intercept - y[te]) ** 2))
        recomputed[lam] = np.mean(losses)
    assert res.lam == min(recomputed, key=recomputed.get)
    for lam in grid:
        assert res.cv_loss[lam] == pytest.approx(recomputed[lam], rel=1e-12)


@pytest.mark.parametrize("kind", ["ridge", "softmax"])
def test_cv_duplication_invariance(kind):
    rng = np.random.default_rng(7)
    X = rng.normal(size=(40, 4))
    if kind == "ridge":
        T = X @ rng.normal(size=4) + rng.normal(scale=2.0, size=40)
    else:
        T = softmax(X @ rng.normal(size=(3, 4)).T + rng.normal(size=(40, 3)))
    grid = (0.001, 0.1, 10.0)
    base = cv_train(X, T, kind, grid, seed=3)
    dup = cv_train(np.repeat(X, 2, axis=0), np.repeat(T, 2, axis=0), kind, grid,
                   fold_ids=np.repeat(base.fold_ids, 2))
    assert dup.lam == base.lam


def test_cv_errors():
    X, y = _linear_data(n=4)
    with pytest.raises(ValueError, match="at least 5 rows"):
        cv_train(X, y, "ridge", (1.0,))
    X, y = _linear_data(n=10)
    with pytest.raises(ValueError, match="fold 4 has no samples"):
        cv_train(X, y, "ridge", (1.0,), fold_ids=np.arange(10) % 4)
    with pytest.raises(ValueError, match="empty"):
        cv_train(X, y, "ridge", ())


def test_prediction_invariant_to_feature_rescaling():
    X, y = _linear_data(5)
    scale = np.array([10.0, 0.1, 3.0, 1000.0, 2.0])
    shift = np.array([5.0, -2.0, 0.0, 1e4, 1.0])
    a = cv_train(X, y, "ridge", (0.1, 1.0), seed=1)
    b = cv_train(X * scale + shift, y, "ridge", (0.1, 1.0), seed=1)
    probe = np.random.default_rng(0).normal(size=(9, 5))
    np.testing.assert_allclose(a.model.predict(probe), b.model.predict(probe * scale + shift), atol=1e-9)


def test_model_json_round_trip(tmp_path):
    X, y = _linear_data(8)
    ridge = cv_train(X, y, "ridge", (1.0,)).model
    Y = softmax(X[:, :3])
    soft = cv_train(X, Y, "softmax", (0.1,), class_labels=("a", "b", "c")).model
    save_models(tmp_path / "m.json", {"income": ridge, "race": soft}, {"seed": 0}, [f"f{i}" for i in range(5)])
    models, doc = load_models(tmp_path / "m.json")
    assert doc["config"] == {"seed": 0}
    np.testing.assert_array_equal(models["income"].predict(X), ridge.predict(X))
    np.testing.assert_array_equal(models["race"].predict(X), soft.predict(X))
    assert models["race"].class_labels == ("a", "b", "c")


def test_cross_entropy_of_perfect_prediction():
    Y = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert cross_entropy(Y, Y) == pytest.approx(0.0, abs=1e-12)
