"""Outcome/effect estimators behind one contract.

Every estimator is fitted on ``(x, a, t, y)`` of the acquired rows and then
exposes the factual prediction ``predict_outcome(x, a, t)`` and the pair of
potential outcomes ``predict_potential(x, a) -> (y0_hat, y1_hat)``.
Estimators that cannot produce factual predictions set
``predicts_factual_outcome = False`` and are rejected by the outcome-error
strategy.
"""

from __future__ import annotations

from functools import cached_property
from typing import Protocol, runtime_checkable

import numpy as np

from ..data_model import as_seed_sequence
from .gp import FactorizationError, GaussianProcessRegressor
from .nets import FeedForward, TrainingError


class EstimatorError(RuntimeError):
    pass


@runtime_checkable
class EffectEstimator(Protocol):
    kind: str
    predicts_factual_outcome: bool

    def fit(self, x, a, t, y): ...

    def predict_outcome(self, x, a, t) -> np.ndarray: ...

    def predict_potential(self, x, a) -> tuple[np.ndarray, np.ndarray]: ...

    def estimate_ate(self, x, a, t=None, y=None) -> float: ...


def design(x, a) -> np.ndarray:
    """Model inputs: covariates with the confounder appended as the last column."""
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64).reshape(-1, 1)
    return np.hstack([x, a])


class _ArmMean:
    """Intercept-only head (used to build a deliberately misspecified model)."""

    def fit(self, X, y):
        self.mean_ = float(np.mean(y))
        return self

    def predict(self, X):
        return np.full(np.asarray(X).shape[0], self.mean_)


class TwoHeadEstimator:
    """One regressor per treatment arm; arm ``t`` only ever sees rows with that ``t``."""

    kind = "two_head"
    predicts_factual_outcome = True

    def __init__(self, seed=None, **hyper):
        self.seed = seed
        self.hyper = hyper

    def _make_head(self, arm: int):
        raise NotImplementedError

    def fit(self, x, a, t, y):
        X = design(x, a)
        t = np.asarray(t).astype(np.int64)
        y = np.asarray(y, dtype=np.float64)
        self.heads_ = {}
        for arm, label in ((0, "control"), (1, "treated")):
            rows = t == arm
            if not rows.any():
                raise EstimatorError(f"empty {label} arm (t={arm}) in training data")
            head = self._make_head(arm)
            try:
                head.fit(X[rows], y[rows])
            except (FactorizationError, TrainingError) as exc:
                raise EstimatorError(f"{label} head failed: {exc}") from exc
            self.heads_[arm] = head
        self.n_train_ = X.shape[0]
        return self

    def predict_potential(self, x, a):
        X = design(x, a)
        return self.heads_[0].predict(X), self.heads_[1].predict(X)

    def predict_outcome(self, x, a, t):
        y0, y1 = self.predict_potential(x, a)
        return np.where(np.asarray(t) == 1, y1, y0)

    def estimate_ate(self, x, a, t=None, y=None) -> float:
        y0, y1 = self.predict_potential(x, a)
        return float(np.mean(y1 - y0))


class MLPMultiEstimator(TwoHeadEstimator):
    """Two multilayer perceptrons (64, 32; ReLU; Adam; early stopping on 10%)."""

    kind = "mlp_multi"
    DEFAULTS = dict(hidden=(64, 32), activation="relu", optimizer="adam", lr=1e-3,
                    epochs=200, batch_size=200, weight_decay=1e-4, early_stopping=True,
                    validation_fraction=0.1, patience=10, tol=1e-4)

    def _make_head(self, arm):
        cfg = {**self.DEFAULTS, **self.hyper}
        return FeedForward(seed=_child_seed(self.seed, arm), **cfg)


class GPMultiEstimator(TwoHeadEstimator):
    """Two RBF Gaussian processes, one per arm."""

    kind = "gp_multi"

    def _make_head(self, arm):
        return GaussianProcessRegressor(**self.hyper)


class DoublyRobustEstimator(TwoHeadEstimator):
    """Per-arm one-hidden-layer outcome networks plus a propensity network.

    ``estimate_ate(x, a)`` is the plug-in mean of ``y1_hat - y0_hat``. Passing
    the factual ``t`` and ``y`` as well gives the augmented inverse-propensity
    form with propensities clipped to ``[clip, 1 - clip]``.

    ``outcome_model="mean"`` and ``propensity_model="marginal"`` swap in
    intercept-only models; they exist to probe double robustness.
    """

    kind = "dr"
    NET_DEFAULTS = dict(hidden=(32,), activation="tanh", optimizer="adam", lr=0.01,
                        epochs=500, batch_size=None)

    def __init__(self, seed=None, clip: float = 0.01, outcome_model: str = "net",
                 propensity_model: str = "net", **hyper):
        super().__init__(seed=seed, **hyper)
        if not 0.0 < clip < 0.5:
            raise ValueError("propensity clip must lie in (0, 0.5)")
        if outcome_model not in ("net", "mean") or propensity_model not in ("net", "marginal"):
            raise ValueError("unknown DR component model")
        self.clip = clip
        self.outcome_model = outcome_model
        self.propensity_model = propensity_model

    def _make_head(self, arm):
        if self.outcome_model == "mean":
            return _ArmMean()
        return FeedForward(seed=_child_seed(self.seed, arm), **{**self.NET_DEFAULTS, **self.hyper})

    def fit(self, x, a, t, y):
        super().fit(x, a, t, y)
        self._X_train = design(x, a)
        self._t_train = np.asarray(t).astype(np.float64)
        self.__dict__.pop("propensity_", None)
        return self

    @cached_property
    def propensity_(self):
        # fitted on first use; only the corrected ATE needs it
        if self.propensity_model == "marginal":
            return float(self._t_train.mean())
        net = FeedForward(output="sigmoid", seed=_child_seed(self.seed, 2),
                          **{**self.NET_DEFAULTS, **self.hyper})
        try:
            return net.fit(self._X_train, self._t_train)
        except TrainingError as exc:
            raise EstimatorError(f"propensity network failed: {exc}") from exc

    def propensity(self, x, a) -> np.ndarray:
        model = self.propensity_
        n = np.asarray(x).shape[0]
        e = np.full(n, model) if isinstance(model, float) else model.predict(design(x, a))
        return np.clip(e, self.clip, 1.0 - self.clip)

    def estimate_ate(self, x, a, t=None, y=None) -> float:
        y0, y1 = self.predict_potential(x, a)
        if t is None or y is None:
            return float(np.mean(y1 - y0))
        t = np.asarray(t, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        e = self.propensity(x, a)
        psi = y1 - y0 + t * (y - y1) / e - (1.0 - t) * (y - y0) / (1.0 - e)
        value = float(np.mean(psi))
        if not np.isfinite(value):
            raise EstimatorError("non-finite doubly robust estimate")
        return value


def _child_seed(seed, k: int):
    ss = as_seed_sequence(seed)
    return np.random.default_rng(np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (k,)))


ESTIMATORS = {
    "dr": DoublyRobustEstimator,
    "gp_multi": GPMultiEstimator,
    "mlp_multi": MLPMultiEstimator,
}


def fit_estimator(kind: str, x, a, t, y, hyperparams: dict | None = None, seed=None) -> EffectEstimator:
    """Build the estimator registered under ``kind`` and fit it."""
    try:
        cls = ESTIMATORS[kind]
    except KeyError:
        raise EstimatorError(f"unknown estimator kind {kind!r}; choose from {sorted(ESTIMATORS)}") from None
    return cls(seed=seed, **(hyperparams or {})).fit(x, a, t, y)


def estimate_ate(model: EffectEstimator, x, a, t=None, y=None) -> float:
    return model.estimate_ate(x, a, t, y)
