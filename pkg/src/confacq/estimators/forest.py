"""Random forest for a binary label, grown with the tree kernels in :mod:`confacq.kernels`."""

from __future__ import annotations

import math

import numpy as np

from .. import kernels
from ..data_model import as_rng


class RandomForest:
    """Bagged Gini trees; the class-1 probability is the mean leaf frequency.

    Args:
        n_trees: Number of trees.
        max_depth: Depth limit of each tree.
        max_features: Features examined per split: ``"sqrt"``, ``"all"`` or a count.
        min_samples_leaf: Smallest allowed leaf, counted with bootstrap multiplicity.
        bootstrap: Resample rows with replacement per tree.
        seed: Anything accepted by ``numpy.random.default_rng``.
    """

    def __init__(self, n_trees: int = 100, max_depth: int = 8, max_features="sqrt",
                 min_samples_leaf: int = 1, bootstrap: bool = True, seed=None):
        if n_trees < 1 or max_depth < 0 or min_samples_leaf < 1:
            raise ValueError("invalid forest hyperparameters")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.seed = seed

    def _n_features(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(d)))
        if self.max_features in ("all", None):
            return d
        return max(1, min(d, int(self.max_features)))

    def fit(self, X, y) -> "RandomForest":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y).astype(np.int64)
        n, d = X.shape
        if n == 0:
            raise ValueError("cannot fit a forest on zero rows")
        if np.any((y != 0) & (y != 1)):
            raise ValueError("labels must be 0/1")
        rng = as_rng(self.seed)
        cap = kernels.tree_capacity(self.max_depth, n)
        m = self._n_features(d)
        shape = (self.n_trees, cap)
        feature = np.full(shape, -1, np.int64)
        threshold = np.zeros(shape)
        left = np.full(shape, -1, np.int64)
        right = np.full(shape, -1, np.int64)
        value = np.zeros(shape)
        in_bag = np.zeros((self.n_trees, n), dtype=bool)
        used = 1
        for k in range(self.n_trees):
            boot = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            keys = rng.random((cap, d))
            f, th, lc, rc, v, n_nodes = kernels.build_tree(
                X, y, boot.astype(np.int64), keys, self.max_depth, m, self.min_samples_leaf)
            feature[k], threshold[k], left[k], right[k], value[k] = f, th, lc, rc, v
            in_bag[k, boot] = True
            used = max(used, int(n_nodes))
        self.feature_ = np.ascontiguousarray(feature[:, :used])
        self.threshold_ = np.ascontiguousarray(threshold[:, :used])
        self.left_ = np.ascontiguousarray(left[:, :used])
        self.right_ = np.ascontiguousarray(right[:, :used])
        self.value_ = np.ascontiguousarray(value[:, :used])
        self.n_features_in_ = d

        per_tree = self._apply(X)
        oob = ~in_bag
        votes = oob.sum(axis=0)
        seen = votes > 0
        if seen.any():
            p_oob = (per_tree * oob).sum(axis=0)[seen] / votes[seen]
            self.oob_accuracy_ = float(np.mean((p_oob >= 0.5) == (y[seen] == 1)))
        else:
            self.oob_accuracy_ = float("nan")
        return self

    def _apply(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return kernels.forest_apply(self.feature_, self.threshold_, self.left_, self.right_,
                                    self.value_, X)

    def predict_proba(self, X) -> np.ndarray:
        """Probability of class 1 for each row of ``X``."""
        return self._apply(X).mean(axis=0)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)
