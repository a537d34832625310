"""Multinomial naive Bayes over non-negative feature weights.

The TF-IDF weights are used directly as fractional counts in the
multinomial likelihood.  Features must be non-negative, which is exactly
why pooled word-embedding vectors are rejected here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .forest import ModelError


@dataclass
class NaiveBayesModel:
    class_log_prior: np.ndarray    # [2]
    feature_log_prob: np.ndarray   # [2, d]
    alpha: float

    @property
    def n_features(self) -> int:
        return self.feature_log_prob.shape[1]

    def feature_log_ratio(self) -> np.ndarray:
        """log P(t | real) - log P(t | fake); the importance signal."""
        return self.feature_log_prob[1] - self.feature_log_prob[0]


def _check_non_negative(X) -> None:
    data = X.data if sp.issparse(X) else np.asarray(X)
    if data.size and float(data.min()) < 0.0:
        raise ModelError(
            "multinomial naive Bayes needs non-negative features; "
            "conditional probabilities cannot absorb negative weights "
            "(use TF-IDF, not pooled embeddings)")


def nb_fit(X, y, alpha: float = 1.0) -> NaiveBayesModel:
    """Class priors plus Laplace-smoothed per-class feature likelihoods."""
    _check_non_negative(X)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    log_prior = np.empty(2)
    log_prob = np.empty((2, d))
    for c in (0, 1):
        n_c = int((y == c).sum())
        if n_c == 0:
            raise ModelError(f"class {c} absent from training data")
        log_prior[c] = np.log(n_c / n)
        rows = X[y == c]
        sums = np.asarray(rows.sum(axis=0)).ravel() if sp.issparse(rows) \
            else np.asarray(rows, dtype=np.float64).sum(axis=0)
        smoothed = sums + alpha
        log_prob[c] = np.log(smoothed / smoothed.sum())
    return NaiveBayesModel(class_log_prior=log_prior, feature_log_prob=log_prob,
                           alpha=alpha)


def nb_predict(model: NaiveBayesModel, X) -> tuple[np.ndarray, np.ndarray]:
    """(argmax-posterior labels, posterior rows that sum to 1)."""
    _check_non_negative(X)
    if X.shape[1] != model.n_features:
        raise ModelError(
            f"feature dimension {X.shape[1]} != fit-time dimension {model.n_features}")
    joint = X @ model.feature_log_prob.T
    joint = np.asarray(joint) + model.class_log_prior
    shifted = joint - joint.max(axis=1, keepdims=True)
    probs = np.exp(shifted)
    probs /= probs.sum(axis=1, keepdims=True)
    return np.argmax(joint, axis=1).astype(np.int64), probs
