"""Conventional classifiers behind one fit/predict/persist interface.

Kinds: multinomial_nb (TF-IDF only), knn, random_forest, gradient_boost.
The forest and boosting models accept either featurization; naive Bayes
rejects negative features by construction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import container
from .boosting import GradientBoostModel, gb_decision_function, gb_fit, gb_predict
from .forest import ModelError, RandomForestModel, rf_fit, rf_predict
from .knn import KNNModel, knn_fit, knn_fit_predict, knn_predict
from .naive_bayes import NaiveBayesModel, nb_fit, nb_predict
from .tree import TreeArrays

MODEL_KINDS = ("multinomial_nb", "knn", "random_forest", "gradient_boost")

# Defaults that the experiment grid uses; every value lands in FitReport.
DEFAULTS = {
    "multinomial_nb": {"alpha": 1.0},
    "knn": {"k": 6},  # metric chosen per featurizer below
    "random_forest": {"n_trees": 64, "min_leaf": 1, "max_depth": None},
    "gradient_boost": {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 3},
}

_DECISION_NOTES = {
    "multinomial_nb": ["smoothing alpha defaulted to 1.0 (not stated upstream)"],
    "knn": ["metric chosen by featurizer: cosine for tfidf, euclidean for "
            "pooled embeddings (not stated upstream)",
            "even-vote ties fall back to the nearest neighbour's label"],
    "random_forest": ["32-32 vote ties resolve to label 0"],
    "gradient_boost": ["estimators and boosting epochs read as one knob (100)"],
}


@dataclass
class FitReport:
    model_kind: str
    featurizer_kind: str
    duration_seconds: float
    hyperparameters: dict
    seed: int
    notes: list[str] = field(default_factory=list)


def knn_metric_for(featurizer_kind: str) -> str:
    return "cosine" if featurizer_kind == "tfidf" else "euclidean"


def fit_classifier(kind: str, X, y, featurizer_kind: str = "tfidf",
                   seed: int = 0, **overrides):
    """Train one conventional model; returns (model, FitReport)."""
    if kind not in MODEL_KINDS:
        raise ModelError(f"unknown model kind: {kind!r}")
    if kind == "multinomial_nb" and featurizer_kind != "tfidf":
        raise ModelError(
            "multinomial_nb accepts TF-IDF only: pooled embeddings contain "
            "negative values, which conditional probabilities cannot absorb")
    hyper = dict(DEFAULTS[kind])
    hyper.update(overrides)
    start = time.perf_counter()
    if kind == "multinomial_nb":
        model = nb_fit(X, y, alpha=hyper["alpha"])
    elif kind == "knn":
        hyper.setdefault("metric", knn_metric_for(featurizer_kind))
        model = knn_fit(X, y, k=hyper["k"], metric=hyper["metric"])
    elif kind == "random_forest":
        model = rf_fit(X, y, n_trees=hyper["n_trees"], seed=seed,
                       min_leaf=hyper["min_leaf"], max_depth=hyper["max_depth"])
    else:
        model = gb_fit(X, y, n_estimators=hyper["n_estimators"],
                       learning_rate=hyper["learning_rate"],
                       max_depth=hyper["max_depth"], seed=seed)
    duration = time.perf_counter() - start
    report = FitReport(model_kind=kind, featurizer_kind=featurizer_kind,
                       duration_seconds=duration, hyperparameters=hyper,
                       seed=seed, notes=list(_DECISION_NOTES[kind]))
    return model, report


def predict_classifier(model, X):
    """(labels, scores) for any classic model object."""
    if isinstance(model, NaiveBayesModel):
        labels, probs = nb_predict(model, X)
        return labels, probs[:, 1]
    if isinstance(model, KNNModel):
        return knn_predict(model, X)
    if isinstance(model, RandomForestModel):
        return rf_predict(model, X)
    if isinstance(model, GradientBoostModel):
        return gb_predict(model, X)
    raise ModelError(f"not a classic model: {type(model).__name__}")


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

_TREE_FIELDS = ("feature", "threshold", "left", "right", "value",
                "n_samples", "impurity")


def _pack_trees(trees, arrays, prefix):
    for i, tree in enumerate(trees):
        for f in _TREE_FIELDS:
            arrays[f"{prefix}{i}.{f}"] = getattr(tree, f)


def _unpack_trees(n, arrays, prefix):
    return [TreeArrays(**{f: arrays[f"{prefix}{i}.{f}"] for f in _TREE_FIELDS})
            for i in range(n)]


def save_classifier(path, kind: str, model, meta_extra: dict | None = None) -> None:
    meta = {"model_kind": kind, "family": "classic"}
    meta.update(meta_extra or {})
    arrays: dict[str, np.ndarray] = {}
    if kind == "multinomial_nb":
        meta["alpha"] = model.alpha
        arrays["class_log_prior"] = model.class_log_prior
        arrays["feature_log_prob"] = model.feature_log_prob
    elif kind == "knn":
        meta.update(k=model.k, metric=model.metric,
                    sparse_train=bool(sp.issparse(model.train_X)),
                    n_features=model.n_features)
        if sp.issparse(model.train_X):
            csr = model.train_X.tocsr()
            arrays["train_data"] = csr.data.astype(np.float64)
            arrays["train_indices"] = csr.indices.astype(np.int32)
            arrays["train_indptr"] = csr.indptr.astype(np.int32)
        else:
            arrays["train_dense"] = np.asarray(model.train_X, dtype=np.float64)
        arrays["train_y"] = model.train_y
    elif kind == "random_forest":
        meta.update(n_trees=model.n_trees, n_features=model.n_features,
                    seed=model.seed, min_leaf=model.min_leaf,
                    max_depth=model.max_depth)
        _pack_trees(model.trees, arrays, "t")
    elif kind == "gradient_boost":
        meta.update(n_trees=len(model.trees), base_score=model.base_score,
                    learning_rate=model.learning_rate, n_features=model.n_features,
                    max_depth=model.max_depth, seed=model.seed)
        _pack_trees(model.trees, arrays, "t")
    else:
        raise ModelError(f"unknown model kind: {kind!r}")
    container.save_container(path, meta, arrays)


def load_classifier(path):
    """Returns (kind, model, meta)."""
    meta, arrays = container.load_container(path)
    kind = meta.get("model_kind")
    if kind == "multinomial_nb":
        model = NaiveBayesModel(class_log_prior=arrays["class_log_prior"],
                                feature_log_prob=arrays["feature_log_prob"],
                                alpha=float(meta["alpha"]))
    elif kind == "knn":
        if meta["sparse_train"]:
            n_features = int(meta["n_features"])
            train_X = sp.csr_matrix(
                (arrays["train_data"], arrays["train_indices"], arrays["train_indptr"]),
                shape=(len(arrays["train_indptr"]) - 1, n_features))
        else:
            train_X = arrays["train_dense"]
        model = KNNModel(train_X=train_X, train_y=arrays["train_y"],
                         k=int(meta["k"]), metric=meta["metric"])
    elif kind == "random_forest":
        model = RandomForestModel(trees=_unpack_trees(int(meta["n_trees"]), arrays, "t"),
                                  n_features=int(meta["n_features"]),
                                  n_trees=int(meta["n_trees"]), seed=int(meta["seed"]),
                                  min_leaf=int(meta["min_leaf"]),
                                  max_depth=meta["max_depth"])
    elif kind == "gradient_boost":
        model = GradientBoostModel(trees=_unpack_trees(int(meta["n_trees"]), arrays, "t"),
                                   base_score=float(meta["base_score"]),
                                   learning_rate=float(meta["learning_rate"]),
                                   n_features=int(meta["n_features"]),
                                   max_depth=int(meta["max_depth"]),
                                   seed=int(meta["seed"]))
    else:
        raise ModelError(f"container holds unknown model kind: {kind!r}")
    return kind, model, meta
