import numpy as np
import pytest

from genforge import nn
from genforge.data import Dataset, fit_standardizer
from genforge.surrogate import (RankDeficientError, SurrogateConfig, fit_linear, load_surrogate, predict,
                                r2_score, rmse, save_surrogate, train_mlp_surrogate)


def test_linear_recovers_exact_coefficients():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(30, 5))
    w, b = np.array([1.5, -2.0, 0.0, 3.25, 0.5]), -7.0
    fit = fit_linear(x, x @ w + b)
    np.testing.assert_allclose(fit.weights, w, atol=1e-10)
    assert fit.intercept == pytest.approx(b, abs=1e-10)


def test_linear_constant_target():
    x = np.random.default_rng(1).normal(size=(10, 5))
    fit = fit_linear(x, np.full(10, 4.0))
    np.testing.assert_allclose(fit.weights, 0, atol=1e-12)
    assert fit.intercept == pytest.approx(4.0)


def test_linear_fit_is_least_squares_optimal():
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=(25, 5)), rng.normal(size=25)
    fit = fit_linear(x, y)
    best = np.sum((fit.predict(x) - y) ** 2)
    coef = np.concatenate([[fit.intercept], fit.weights])
    design = np.column_stack([np.ones(25), x])
    # normal equations: the residual is orthogonal to every column
    np.testing.assert_allclose(design.T @ (design @ coef - y), 0, atol=1e-10)
    for _ in range(10_000):
        trial = coef + rng.normal(scale=1e-3, size=6)
        assert np.sum((design @ trial - y) ** 2) >= best - 1e-12


def test_linear_rank_deficiency():
    x = np.random.default_rng(3).normal(size=(10, 5))
    x[:, 4] = 2 * x[:, 1]
    with pytest.raises(RankDeficientError):
        fit_linear(x, np.arange(10.0))
    with pytest.raises(RankDeficientError):
        fit_linear(np.ones((4, 5)), np.arange(4.0))


def test_r2_and_rmse_fixtures():
    assert r2_score([1, 2, 3], [1, 2, 3]) == 1.0
    assert r2_score([2, 2, 2], [1, 2, 3]) == 0.0
    assert r2_score([3, 2, 1], [1, 2, 3]) == -3.0
    assert rmse([0, 0, 0], [0, 0, 1]) == pytest.approx(np.sqrt(1 / 3))
    with pytest.raises(ValueError):
        r2_score([1, 2], [5, 5])
    with pytest.raises(ValueError):
        rmse([1.0], [1.0])
    with pytest.raises(nn.ShapeError):
        rmse([1, 2], [1, 2, 3])


def toy(n=64, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform([200, 0, 0.02, 30, 0.0005], [20000, 20, 0.3, 72, 0.05], size=(n, 5))
    y = 130 - 0.0005 * X[:, 0] - 0.3 * X[:, 1] + 20 * X[:, 2]
    return Dataset(X, y)


def test_mlp_overfits_two_points():
    ds = toy(n=2)
    oracle = train_mlp_surrogate(ds, fit_standardizer(ds),
                                 SurrogateConfig(hidden=(16,), epochs=300, learning_rate=1e-2, batch_size=2))
    assert oracle.train_rmse < 1e-3
    assert oracle.loss_trace[-1] < oracle.loss_trace[0]


def test_mlp_learns_smooth_target():
    ds = toy(n=200)
    oracle = train_mlp_surrogate(ds, fit_standardizer(ds),
                                 SurrogateConfig(hidden=(32, 32), epochs=100, learning_rate=3e-3, batch_size=32))
    assert oracle.train_r2 > 0.98
    assert oracle.train_r2 == pytest.approx(r2_score(predict(oracle, ds.X), ds.y))


@pytest.fixture(scope="module")
def small_oracle():
    ds = toy()
    return train_mlp_surrogate(ds, fit_standardizer(ds), SurrogateConfig(hidden=(8,), epochs=3, batch_size=16)), ds


def test_predict_is_pure(small_oracle):
    oracle, ds = small_oracle
    before = [p.copy() for p in oracle.network.params()]
    a = predict(oracle, ds.X)
    b = oracle.predict(ds.X)
    np.testing.assert_array_equal(a, b)
    for p, q in zip(before, oracle.network.params()):
        np.testing.assert_array_equal(p, q)
    assert predict(oracle, ds.X[0]).shape == (1,)
    with pytest.raises(nn.ShapeError):
        predict(oracle, np.ones((2, 4)))


def test_surrogate_round_trip(small_oracle, tmp_path):
    oracle, ds = small_oracle
    save_surrogate(oracle, tmp_path / "o.json", SurrogateConfig(hidden=(8,)))
    back = load_surrogate(tmp_path / "o.json")
    np.testing.assert_array_equal(predict(back, ds.X), predict(oracle, ds.X))
    assert back.train_rmse == oracle.train_rmse
