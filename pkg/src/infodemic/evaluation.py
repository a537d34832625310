"""Confusion-matrix metrics and the comparative report tables.

The positive class for precision/recall is "real" (label 1).  Accuracy is
(tp + tn) / total; undefined denominators yield 0 together with a flag so
tables stay renderable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise EvaluationError(
            f"label vectors differ in length: {y_true.shape} vs {y_pred.shape}")
    return ConfusionMatrix(
        tp=int(((y_true == 1) & (y_pred == 1)).sum()),
        fp=int(((y_true == 0) & (y_pred == 1)).sum()),
        tn=int(((y_true == 0) & (y_pred == 0)).sum()),
        fn=int(((y_true == 1) & (y_pred == 0)).sum()),
    )


def metrics(cm: ConfusionMatrix) -> tuple[float, float, float, float]:
    """(accuracy, precision, recall, f1) as fractions in [0, 1].

    Raises on an empty matrix; a zero denominator in precision/recall/f1
    produces 0.0 (see ``metrics_flags`` for which ones were undefined).
    """
    if cm.total == 0:
        raise EvaluationError("cannot compute metrics over zero documents")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return accuracy, precision, recall, f1


def metrics_flags(cm: ConfusionMatrix) -> list[str]:
    flags = []
    if cm.tp + cm.fp == 0:
        flags.append("precision undefined (no positive predictions); reported 0")
    if cm.tp + cm.fn == 0:
        flags.append("recall undefined (no positive documents); reported 0")
    return flags


@dataclass
class EvalReport:
    """One (model, featurizer) cell of the comparison grid."""

    model_kind: str
    featurizer_kind: str
    cm: ConfusionMatrix
    accuracy: float   # percentages
    precision: float
    recall: float
    f1: float
    runtime_seconds: float = 0.0
    seed: int = 0
    flags: list[str] = field(default_factory=list)

    POSITIVE_CLASS = "real (label 1)"

    @classmethod
    def from_labels(cls, model_kind, featurizer_kind, y_true, y_pred,
                    runtime_seconds: float = 0.0, seed: int = 0) -> "EvalReport":
        cm = confusion(y_true, y_pred)
        acc, prec, rec, f1 = metrics(cm)
        return cls(model_kind=model_kind, featurizer_kind=featurizer_kind, cm=cm,
                   accuracy=100.0 * acc, precision=100.0 * prec,
                   recall=100.0 * rec, f1=100.0 * f1,
                   runtime_seconds=runtime_seconds, seed=seed,
                   flags=metrics_flags(cm))

    def metric_row(self) -> dict:
        return {"model": self.model_kind, "featurizer": self.featurizer_kind,
                "accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1,
                "tp": self.cm.tp, "fp": self.cm.fp,
                "tn": self.cm.tn, "fn": self.cm.fn, "seed": self.seed}


MODEL_ORDER = ("random_forest", "multinomial_nb", "gradient_boost", "knn",
               "dnn", "cnn", "gru", "lstm", "rmdl")

MODEL_DISPLAY = {
    "random_forest": "Random Forest",
    "multinomial_nb": "Naive Bayes",
    "gradient_boost": "Gradient Boost",
    "knn": "KNN",
    "dnn": "DNN",
    "cnn": "CNN",
    "gru": "RNN (GRU)",
    "lstm": "RNN (LSTM)",
    "rmdl": "RMDL",
}


def comparison_table(reports: list[EvalReport]) -> str:
    """Accuracy grid: model rows, featurizer columns, best cell starred.

    The naive-Bayes/embedding cell renders as "-", and the ensemble's
    combined accuracy spans both columns.
    """
    cells: dict[tuple[str, str], float] = {}
    for rep in reports:
        cells[(rep.model_kind, rep.featurizer_kind)] = rep.accuracy
    best = max(cells.values()) if cells else None

    def fmt(model, feat):
        if model == "multinomial_nb" and feat == "embedding":
            return "-"
        acc = cells.get((model, feat))
        if acc is None:
            return ""
        star = " *" if best is not None and acc == best else ""
        return f"{acc:.2f}{star}"

    header = ("Model", "TFIDF", "Word Embedding")
    rows = [header]
    for model in MODEL_ORDER:
        if not any(m == model for (m, _f) in cells):
            continue
        if model == "rmdl":
            acc = cells.get(("rmdl", "combined"))
            if acc is not None:
                star = " *" if best is not None and acc == best else ""
                rows.append((MODEL_DISPLAY[model], f"{acc:.2f}{star} (combined)", ""))
            continue
        rows.append((MODEL_DISPLAY[model], fmt(model, "tfidf"), fmt(model, "embedding")))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = []
    for i, r in enumerate(rows):
        lines.append("  ".join(f"{r[j]:<{widths[j]}}" for j in range(3)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[j] for j in range(3)))
    return "\n".join(lines) + "\n"


def reports_to_csv(reports: list[EvalReport]) -> str:
    """Deterministic metric CSV (no runtimes; those vary run to run)."""
    cols = ("model", "featurizer", "accuracy", "precision", "recall", "f1",
            "tp", "fp", "tn", "fn", "seed")
    lines = [",".join(cols)]
    ordered = sorted(reports, key=lambda r: (MODEL_ORDER.index(r.model_kind)
                                             if r.model_kind in MODEL_ORDER else 99,
                                             r.featurizer_kind))
    for rep in ordered:
        row = rep.metric_row()
        lines.append(",".join(
            f"{row[c]:.10f}" if isinstance(row[c], float) else str(row[c])
            for c in cols))
    return "\n".join(lines) + "\n"


def top_features(model, vocab, k: int = 20) -> list[tuple[str, float]]:
    """Top-k most class-separating terms with scores, descending.

    Naive Bayes ranks by |log likelihood ratio|; the forest ranks by mean
    impurity decrease.  Models without importances are rejected.
    """
    from .classic.naive_bayes import NaiveBayesModel
    from .classic.forest import RandomForestModel

    if isinstance(model, NaiveBayesModel):
        scores = np.abs(model.feature_log_ratio())
    elif isinstance(model, RandomForestModel):
        scores = model.feature_importances()
    else:
        raise EvaluationError(
            f"{type(model).__name__} exposes no feature importances")
    terms = vocab.terms()
    order = np.argsort(-scores, kind="stable")[:min(k, len(terms))]
    return [(terms[i], float(scores[i])) for i in order]
