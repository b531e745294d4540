"""Extremely randomized trees: no bootstrap, random split thresholds.

Defaults follow the usual setting for this family: 100 trees, sqrt(p)
candidate features per node for classification and p for regression,
min_split = 2, unlimited depth.  Ties break toward the lowest feature
index, then the lowest threshold; prediction ties toward the lowest
label in sorted label order.
"""

import math

import numpy as np

from .._base import BaseEstimator, check_is_fitted
from ..validation import check_X_y, check_array
from . import _kernels

__all__ = ["ExtraTreesClassifier", "ExtraTreesRegressor"]


def _tree_seeds(random_state, n_trees):
    if isinstance(random_state, np.random.Generator):
        return random_state.integers(0, 2**64, size=n_trees, dtype=np.uint64)
    if not isinstance(random_state, np.random.SeedSequence):
        random_state = np.random.SeedSequence(random_state)
    return random_state.generate_state(n_trees, np.uint64)


class _BaseForest(BaseEstimator):
    def __init__(self, n_trees=100, k_candidates=None, min_split=2,
                 random_state=None):
        self.n_trees = n_trees
        self.k_candidates = k_candidates
        self.min_split = min_split
        self.random_state = random_state

    def _default_k(self, p):
        raise NotImplementedError

    def _fit_arrays(self, X, y_codes, n_classes):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_split < 2:
            raise ValueError("min_split must be >= 2")
        n, p = X.shape
        k = self.k_candidates
        if k is None:
            k = self._default_k(p)
        k = max(1, min(int(k), p))
        max_nodes = max(2 * n - 1, 1)
        feat = np.full((self.n_trees, max_nodes), -1, np.int64)
        thr = np.zeros((self.n_trees, max_nodes))
        left = np.full((self.n_trees, max_nodes), -1, np.int64)
        right = np.full((self.n_trees, max_nodes), -1, np.int64)
        value = np.zeros((self.n_trees, max_nodes))
        imp = np.zeros((self.n_trees, p))
        n_nodes = np.zeros(self.n_trees, np.int64)
        seeds = _tree_seeds(self.random_state, self.n_trees)
        _kernels.grow_forest(
            X, y_codes, n_classes, k, self.min_split, seeds,
            feat, thr, left, right, value, imp, n_nodes,
        )
        self._feat = feat
        self._thr = thr
        self._left = left
        self._right = right
        self._value = value
        self.tree_n_nodes_ = n_nodes
        self.n_features_in_ = p
        self.k_ = k
        per_tree = imp.mean(axis=0)
        total = per_tree.sum()
        self.feature_importances_ = (
            per_tree / total if total > 0 else np.zeros(p)
        )
        return self

    def _check_predict_input(self, X):
        check_is_fitted(self, "_feat")
        X = check_array(X, ndim=2, name="X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, model was fit with "
                f"{self.n_features_in_}"
            )
        return X


class ExtraTreesClassifier(_BaseForest):
    """Majority-vote ensemble; labels may be any sortable values."""

    def _default_k(self, p):
        return max(1, math.isqrt(p))

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, codes = np.unique(y, return_inverse=True)
        self._fit_arrays(X, codes.astype(np.float64), len(self.classes_))
        return self

    def predict(self, X):
        X = self._check_predict_input(X)
        votes = _kernels.predict_votes(
            X, self._feat, self._thr, self._left, self._right, self._value,
            len(self.classes_),
        )
        # argmax takes the first maximum: the lowest label wins ties
        return self.classes_[np.argmax(votes, axis=1)]

    def score(self, X, y):
        from ..metrics import accuracy

        return accuracy(np.asarray(y), self.predict(X))


class ExtraTreesRegressor(_BaseForest):
    """Mean-over-trees ensemble for real-valued targets."""

    def _default_k(self, p):
        return p

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self._fit_arrays(X, y, 0)
        return self

    def predict(self, X):
        X = self._check_predict_input(X)
        return _kernels.predict_mean(
            X, self._feat, self._thr, self._left, self._right, self._value
        )

    def score(self, X, y):
        from ..metrics import r2_score

        return r2_score(np.asarray(y, dtype=float), self.predict(X))
