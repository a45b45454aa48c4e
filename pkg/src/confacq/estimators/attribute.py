"""Model of p(A = 1 | x, t) used by every acquisition strategy except Random."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .forest import RandomForest

log = logging.getLogger(__name__)

FOREST_DEFAULTS = {"n_trees": 100, "max_depth": 8, "max_features": "sqrt",
                   "min_samples_leaf": 1, "bootstrap": True}


def _features(x, t) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.column_stack([x, np.asarray(t, dtype=np.float64)])


@dataclass
class AttributeModel:
    """Random forest on ``[x, t]``, or a constant when training saw one class only."""

    forest: RandomForest | None
    constant: float | None = None
    accuracy: float = float("nan")
    params: dict = field(default_factory=dict)

    def predict(self, x, t) -> np.ndarray:
        n = np.asarray(x).shape[0]
        if self.forest is None:
            return np.full(n, self.constant, dtype=np.float64)
        p = self.forest.predict_proba(_features(x, t))
        return np.clip(p, 0.0, 1.0)


def fit_attribute_model(x, t, a, seed=None, **params) -> AttributeModel:
    """Fit the confounder classifier on the acquired (train) rows."""
    a = np.asarray(a).astype(np.int64)
    if a.size == 0:
        raise ValueError("no training rows for the attribute model")
    cfg = {**FOREST_DEFAULTS, **params}
    classes = np.unique(a)
    if classes.size == 1:
        log.warning("attribute model sees a single class (A=%d); predicting it everywhere",
                    int(classes[0]))
        return AttributeModel(None, constant=float(classes[0]), accuracy=1.0, params=cfg)
    forest = RandomForest(seed=seed, **cfg).fit(_features(x, t), a)
    return AttributeModel(forest, accuracy=forest.oob_accuracy_, params=cfg)


def predict_attribute(model: AttributeModel, x, t) -> np.ndarray:
    return model.predict(x, t)
