"""Gradient boosting for binary labels with logistic loss.

Stagewise regression trees are fit to the residuals (label minus current
probability); each leaf then takes a Newton step

    gamma = sum(residual) / sum(p * (1 - p))

and the additive score F accumulates learning_rate * gamma.  Probabilities
come from the sigmoid link.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import kernels
from .forest import ModelError
from .tree import TreeArrays, grow_tree, iter_dense_batches, tree_predict_value


def _sigmoid(a):
    out = np.empty_like(a, dtype=np.float64)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


@dataclass
class GradientBoostModel:
    trees: list[TreeArrays]
    base_score: float  # prior log-odds
    learning_rate: float
    n_features: int
    max_depth: int
    seed: int
    train_loss: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _log_loss(y, p):
    eps = 1e-12
    p = np.clip(p, eps, 1.0 - eps)
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).mean())


def gb_fit(X, y, n_estimators: int = 100, learning_rate: float = 0.1,
           max_depth: int = 3, seed: int = 0, min_leaf: int = 1) -> GradientBoostModel:
    if n_estimators < 1:
        raise ModelError("n_estimators must be at least 1")
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    X_csc = X.tocsc() if sp.issparse(X) else sp.csc_matrix(np.asarray(X, dtype=np.float64))
    X_csc.sort_indices()

    warnings = []
    p_prior = float(y.mean())
    if p_prior in (0.0, 1.0):
        warnings.append("training data has a single class; constant log-odds model")
        p_clip = min(max(p_prior, 1e-12), 1.0 - 1e-12)
        return GradientBoostModel(trees=[], base_score=float(np.log(p_clip / (1 - p_clip))),
                                  learning_rate=learning_rate, n_features=d,
                                  max_depth=max_depth, seed=seed, warnings=warnings)

    F = np.full(n, np.log(p_prior / (1.0 - p_prior)), dtype=np.float64)
    rng = np.random.default_rng(seed)
    trees: list[TreeArrays] = []
    losses: list[float] = []
    for _ in range(n_estimators):
        p = _sigmoid(F)
        residual = y - p
        tree, leaf_of = grow_tree(X_csc, residual, kernels.MSE, rng,
                                  max_features=None, min_leaf=min_leaf,
                                  max_depth=max_depth, return_assignment=True)
        # Newton leaf values over the terminal regions
        hess = p * (1.0 - p)
        num = np.bincount(leaf_of, weights=residual, minlength=tree.n_nodes)
        den = np.bincount(leaf_of, weights=hess, minlength=tree.n_nodes)
        gamma = np.zeros(tree.n_nodes, dtype=np.float64)
        nz = den > 1e-12
        gamma[nz] = num[nz] / den[nz]
        tree.value[:] = gamma
        F += learning_rate * gamma[leaf_of]
        trees.append(tree)
        losses.append(_log_loss(y, _sigmoid(F)))

    return GradientBoostModel(trees=trees, base_score=float(np.log(p_prior / (1.0 - p_prior))),
                              learning_rate=learning_rate, n_features=d,
                              max_depth=max_depth, seed=seed, train_loss=losses,
                              warnings=warnings)


def gb_decision_function(model: GradientBoostModel, X) -> np.ndarray:
    if X.shape[1] != model.n_features:
        raise ModelError(
            f"feature dimension {X.shape[1]} != fit-time dimension {model.n_features}")
    n = X.shape[0]
    F = np.full(n, model.base_score, dtype=np.float64)
    for start, block in iter_dense_batches(X):
        stop = start + block.shape[0]
        for tree in model.trees:
            F[start:stop] += model.learning_rate * tree_predict_value(tree, block)
    return F


def gb_predict(model: GradientBoostModel, X) -> tuple[np.ndarray, np.ndarray]:
    """(labels, probability of class 1); threshold 0.5."""
    p = _sigmoid(gb_decision_function(model, X))
    return (p > 0.5).astype(np.int64), p
