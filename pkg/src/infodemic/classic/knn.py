"""k-nearest-neighbour classification by brute-force search.

Cosine distance suits sparse TF-IDF rows; Euclidean suits dense pooled
embeddings.  Neighbour order breaks distance ties by the lower training
index, and an even vote falls back to the single nearest neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .forest import ModelError


@dataclass
class KNNModel:
    train_X: object   # CSR matrix or dense ndarray
    train_y: np.ndarray
    k: int
    metric: str

    @property
    def n_features(self) -> int:
        return self.train_X.shape[1]


def _normalize_rows(X):
    if sp.issparse(X):
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1))).ravel()
        norms[norms == 0.0] = 1.0
        return sp.diags(1.0 / norms) @ X
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    norms[norms == 0.0] = 1.0
    return X / norms[:, None]


def knn_fit(X, y, k: int = 6, metric: str = "cosine") -> KNNModel:
    if metric not in ("cosine", "euclidean"):
        raise ModelError(f"unsupported metric: {metric!r}")
    n = X.shape[0]
    if n == 0:
        raise ModelError("empty training set")
    if not 1 <= k <= n:
        raise ModelError(f"k={k} must lie in [1, {n}]")
    y = np.asarray(y, dtype=np.int64)
    if metric == "cosine":
        X = _normalize_rows(X)
    elif sp.issparse(X):
        X = X.tocsr()
    else:
        X = np.asarray(X, dtype=np.float64)
    return KNNModel(train_X=X, train_y=y, k=k, metric=metric)


def _distance_block(model: KNNModel, Q):
    if model.metric == "cosine":
        Qn = _normalize_rows(Q)
        sims = Qn @ model.train_X.T
        sims = np.asarray(sims.todense()) if sp.issparse(sims) else np.asarray(sims)
        return 1.0 - sims
    Qd = np.asarray(Q.todense(), dtype=np.float64) if sp.issparse(Q) else np.asarray(Q, dtype=np.float64)
    Td = model.train_X
    Td = np.asarray(Td.todense(), dtype=np.float64) if sp.issparse(Td) else Td
    cross = Qd @ Td.T
    qs = (Qd * Qd).sum(axis=1)[:, None]
    ts = (Td * Td).sum(axis=1)[None, :]
    return np.maximum(qs + ts - 2.0 * cross, 0.0)


def knn_predict(model: KNNModel, X, batch: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """(labels, positive-vote fractions) for the query rows."""
    if X.shape[1] != model.n_features:
        raise ModelError(
            f"feature dimension {X.shape[1]} != fit-time dimension {model.n_features}")
    n = X.shape[0]
    labels = np.empty(n, dtype=np.int64)
    fractions = np.empty(n, dtype=np.float64)
    k = model.k
    for start in range(0, n, batch):
        stop = min(start + batch, n)
        dists = _distance_block(model, X[start:stop])
        order = np.argsort(dists, axis=1, kind="stable")[:, :k]
        votes = model.train_y[order]
        pos = votes.sum(axis=1)
        block_labels = np.where(pos * 2 > k, 1, 0)
        tie = pos * 2 == k
        if tie.any():
            block_labels[tie] = votes[tie, 0]
        labels[start:stop] = block_labels
        fractions[start:stop] = pos / k
    return labels, fractions


def knn_fit_predict(train_X, train_y, query_X, k: int = 6,
                    metric: str = "cosine") -> np.ndarray:
    """One-shot convenience wrapper: fit on the left, label the right."""
    model = knn_fit(train_X, train_y, k=k, metric=metric)
    return knn_predict(model, query_X)[0]
