import numpy as np
import pytest

from confacq.estimators import (
    DoublyRobustEstimator,
    EstimatorError,
    FeedForward,
    GaussianProcessRegressor,
    RandomForest,
    estimate_ate,
    fit_attribute_model,
    fit_estimator,
    predict_attribute,
)
from confacq.estimators.gp import FactorizationError, cholesky_with_jitter

from helpers import linear_world


def test_forest_separable_holdout():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(1000, 3))
    t = rng.integers(0, 2, 1000)
    a = (x[:, 0] > 0).astype(int)
    model = fit_attribute_model(x[:500], t[:500], a[:500], seed=1)
    acc = np.mean((predict_attribute(model, x[500:], t[500:]) > 0.5) == a[500:])
    assert acc >= 0.95
    assert 0.5 < model.accuracy <= 1.0


def test_forest_independent_confounder_near_prior():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(2000, 4))
    t = rng.integers(0, 2, 2000)
    a = rng.permutation((np.arange(2000) < 700).astype(int))
    p = predict_attribute(fit_attribute_model(x, t, a, seed=3), x, t)
    assert np.mean(np.abs(p - 0.35)) < 0.1


def test_single_class_falls_back_to_constant(caplog):
    x = np.zeros((5, 2))
    with caplog.at_level("WARNING"):
        model = fit_attribute_model(x, np.array([0, 1, 0, 1, 1]), np.ones(5), seed=0)
    assert "single class" in caplog.text
    np.testing.assert_array_equal(model.predict(np.ones((3, 2)), np.zeros(3)), 1.0)


def test_forest_deterministic_and_pure():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(200, 5))
    y = (X[:, 1] > 0.2).astype(int)
    f1 = RandomForest(n_trees=20, seed=9).fit(X, y)
    f2 = RandomForest(n_trees=20, seed=9).fit(X, y)
    np.testing.assert_array_equal(f1.predict_proba(X), f2.predict_proba(X))
    np.testing.assert_array_equal(f1.predict_proba(X), f1.predict_proba(X))


def test_dr_recovers_effect_single_seed():
    x, a, t, y, _ = linear_world(2000, tau=2.0, seed=0)
    model = fit_estimator("dr", x, a, t, y, seed=0)
    assert abs(model.estimate_ate(x, a) - 2.0) < 0.2
    assert abs(model.estimate_ate(x, a, t, y) - 2.0) < 0.2


def test_gp_interpolates_sine():
    x = np.linspace(0, 2 * np.pi, 50)[:, None]
    y = np.sin(x[:, 0])
    gp = GaussianProcessRegressor(noise_variance=1e-6).fit(x, y)
    assert np.sqrt(np.mean((gp.predict(x) - y) ** 2)) < 0.05


def test_gp_posterior_mean_hits_targets():
    x = np.linspace(0, 5, 10)[:, None]
    y = np.cos(x[:, 0])
    gp = GaussianProcessRegressor(lengthscale=1.0, signal_variance=1.0, noise_variance=0.0, jitter=1e-8).fit(x, y)
    np.testing.assert_allclose(gp.predict(x), y, atol=1e-6)


def test_gp_jitter_escalates_then_fails():
    K = np.ones((3, 3)) - 1e-6 * np.eye(3)
    _, used = cholesky_with_jitter(K, 1e-10, 1.0)
    assert used > 1e-6
    with pytest.raises(FactorizationError):
        cholesky_with_jitter(-np.eye(3), 1e-8, 1e-4)


def test_gp_marginal_likelihood_search_improves():
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 4, size=(40, 1))
    y = np.sin(2 * x[:, 0]) + 0.05 * rng.normal(size=40)
    plain = GaussianProcessRegressor().fit(x, y)
    tuned = GaussianProcessRegressor(optimize=True).fit(x, y)
    assert tuned.log_marginal_likelihood() >= plain.log_marginal_likelihood() - 1e-6


@pytest.mark.parametrize("kind", ["dr", "gp_multi", "mlp_multi"])
def test_constant_outcome(kind):
    rng = np.random.default_rng(5)
    x = rng.normal(size=(60, 3))
    a = rng.integers(0, 2, 60)
    t = np.tile([0, 1], 30)
    model = fit_estimator(kind, x, a, t, np.full(60, 3.5), seed=0)
    y0, y1 = model.predict_potential(rng.normal(size=(10, 3)), rng.integers(0, 2, 10))
    np.testing.assert_allclose(y0, 3.5, atol=0.01)
    np.testing.assert_allclose(y1, 3.5, atol=0.01)


@pytest.mark.parametrize("kind", ["dr", "gp_multi", "mlp_multi"])
def test_arm_isolation(kind):
    x, a, t, y, _ = linear_world(120, seed=2)
    y2 = y.copy()
    y2[t == 0] += 10.0
    m1 = fit_estimator(kind, x, a, t, y, seed=4)
    m2 = fit_estimator(kind, x, a, t, y2, seed=4)
    np.testing.assert_array_equal(m1.predict_potential(x, a)[1], m2.predict_potential(x, a)[1])
    assert not np.array_equal(m1.predict_potential(x, a)[0], m2.predict_potential(x, a)[0])


@pytest.mark.parametrize("kind", ["dr", "gp_multi", "mlp_multi"])
def test_empty_arm_named(kind):
    x = np.zeros((4, 2))
    with pytest.raises(EstimatorError, match="treated"):
        fit_estimator(kind, x, np.zeros(4), np.zeros(4), np.ones(4))


def test_unknown_kind():
    with pytest.raises(EstimatorError, match="unknown"):
        fit_estimator("cf", np.zeros((2, 1)), [0, 1], [0, 1], [0, 0])


def test_fit_deterministic_per_seed():
    x, a, t, y, _ = linear_world(200, seed=7)
    p1 = fit_estimator("dr", x, a, t, y, seed=11).predict_potential(x, a)
    p2 = fit_estimator("dr", x, a, t, y, seed=11).predict_potential(x, a)
    np.testing.assert_array_equal(p1[0], p2[0])


class _Fixed:
    def __init__(self, y0, y1):
        self.y0, self.y1 = np.asarray(y0, float), np.asarray(y1, float)

    def predict_potential(self, x, a):
        return self.y0, self.y1

    def estimate_ate(self, x, a, t=None, y=None):
        y0, y1 = self.predict_potential(x, a)
        return float(np.mean(y1 - y0))


def test_estimate_ate_arithmetic():
    assert estimate_ate(_Fixed([1, 1], [1, 1]), None, None) == 0.0
    assert estimate_ate(_Fixed([0, 0], [1, 3]), None, None) == 2.0


def test_dr_clip_validation():
    with pytest.raises(ValueError):
        DoublyRobustEstimator(clip=0.7)


def test_dr_propensity_clipped():
    x, a, t, y, _ = linear_world(300, seed=3)
    m = fit_estimator("dr", x, a, t, y, seed=0)
    e = m.propensity(x * 50, a)
    assert e.min() >= 0.01 and e.max() <= 0.99


def test_network_loss_is_finite_and_falls():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 2))
    y = X[:, 0] - 2 * X[:, 1]
    net = FeedForward(hidden=(16,), epochs=200, seed=0).fit(X, y)
    hist = np.asarray(net.loss_history_)
    assert np.all(np.isfinite(hist))
    assert hist[-1] < hist[0]
