"""Random forest: bootstrapped gini CART trees with random feature subsets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import kernels
from .tree import TreeArrays, feature_importance, grow_tree, iter_dense_batches, tree_predict_value


class ModelError(Exception):
    pass


@dataclass
class RandomForestModel:
    trees: list[TreeArrays]
    n_features: int
    n_trees: int
    seed: int
    min_leaf: int = 1
    max_depth: int | None = None
    warnings: list[str] = field(default_factory=list)

    def feature_importances(self) -> np.ndarray:
        """Mean impurity-decrease per feature across trees, normalised to 1."""
        total = np.zeros(self.n_features)
        for t in self.trees:
            total += feature_importance(t, self.n_features)
        s = total.sum()
        return total / s if s > 0 else total


def rf_fit(X, y, n_trees: int = 64, seed: int = 0, min_leaf: int = 1,
           max_depth: int | None = None) -> RandomForestModel:
    """Fit ``n_trees`` CART trees, each on its own bootstrap sample.

    Every split draws a fresh sqrt(d) feature subset.  Tree t uses the rng
    stream seeded by (seed, t), so the forest is a pure function of
    (data order, seed).
    """
    if n_trees < 1:
        raise ModelError("n_trees must be at least 1")
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    X_csr = X.tocsr() if sp.issparse(X) else sp.csr_matrix(np.asarray(X, dtype=np.float64))
    warnings = []
    if len(np.unique(y)) < 2:
        warnings.append("training data has a single class; forest is a constant model")
    max_features = max(1, int(np.sqrt(d)))
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        boot = rng.integers(0, n, size=n)
        Xb = X_csr[boot].tocsc()
        Xb.sort_indices()
        trees.append(grow_tree(Xb, y[boot], kernels.GINI, rng,
                               max_features=max_features, min_leaf=min_leaf,
                               max_depth=max_depth))
    return RandomForestModel(trees=trees, n_features=d, n_trees=n_trees,
                             seed=seed, min_leaf=min_leaf, max_depth=max_depth,
                             warnings=warnings)


def rf_predict(model: RandomForestModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Majority vote over trees.

    Returns (labels, vote fractions).  A tree votes the majority class of
    the reached leaf; an exact half-half vote resolves to label 0.
    """
    if X.shape[1] != model.n_features:
        raise ModelError(
            f"feature dimension {X.shape[1]} != fit-time dimension {model.n_features}")
    n = X.shape[0]
    votes = np.zeros(n, dtype=np.int64)
    for start, block in iter_dense_batches(X):
        stop = start + block.shape[0]
        for tree in model.trees:
            votes[start:stop] += tree_predict_value(tree, block) > 0.5
    fractions = votes / model.n_trees
    labels = (votes * 2 > model.n_trees).astype(np.int64)
    return labels, fractions
