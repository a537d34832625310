"""Randomized multi-model ensemble with majority voting.

Three members per family by default: dense stacks fed TF-IDF rows, plus
convolutional and recurrent stacks fed embedding sequences.  Member depths
and widths are drawn uniformly from configured ranges, seeded from the
master seed plus the member index, so the whole ensemble is reproducible.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import neural
from .engine import LayerSpec
from .neural import (ArchitectureSpec, NeuralModel, TrainConfig,
                     TrainingDiverged, train_model)

FAMILIES = ("dnn", "cnn", "rnn")
FAMILY_FEATURIZER = {"dnn": "tfidf", "cnn": "embedding", "rnn": "embedding"}


class EnsembleError(Exception):
    pass


@dataclass
class EnsembleConfig:
    models_per_family: int = 3
    epochs: int = 8
    dnn_layer_range: tuple[int, int] = (2, 5)
    cnn_branch_range: tuple[int, int] = (2, 4)
    rnn_layer_range: tuple[int, int] = (1, 3)
    node_range: tuple[int, int] = (32, 256)
    dropout: float = 0.25
    master_seed: int = 0
    batch_size: int = 64
    learning_rate: float = 1e-3
    dtype: str = "float64"
    max_resample: int = 8

    def __post_init__(self):
        for lo, hi in (self.dnn_layer_range, self.cnn_branch_range,
                       self.rnn_layer_range, self.node_range):
            if lo > hi or lo < 1:
                raise EnsembleError(f"bad sampling range ({lo}, {hi})")
        if (self.models_per_family * len(FAMILIES)) % 2 == 0:
            raise EnsembleError("total member count must be odd for binary voting")


@dataclass
class EnsembleData:
    """Featurized splits shared by all members."""

    X_tfidf_train: object
    X_tfidf_val: object
    X_tfidf_test: object
    X_seq_train: np.ndarray
    X_seq_val: np.ndarray
    X_seq_test: np.ndarray
    y_train: np.ndarray
    y_val: np.ndarray
    y_test: np.ndarray
    embedding_matrix: np.ndarray


@dataclass
class MemberRecord:
    name: str
    family: str
    featurizer: str
    spec: ArchitectureSpec
    seed: int
    model: NeuralModel | None = None
    test_accuracy: float | None = None
    val_accuracy: float | None = None
    excluded: bool = False


@dataclass
class EnsembleModel:
    members: list[MemberRecord]
    config: EnsembleConfig
    warnings: list[str] = field(default_factory=list)

    def active_members(self) -> list[MemberRecord]:
        return [m for m in self.members if not m.excluded]


def _sample_int(rng: np.random.Generator, lo: int, hi: int) -> int:
    return int(rng.integers(lo, hi + 1))


def sample_architectures(config: EnsembleConfig, input_dim: int,
                         vocab_size: int, embed_dim: int,
                         max_len: int) -> list[MemberRecord]:
    """Draw every member's architecture from the configured ranges.

    Shapes that cannot be built (a sampled conv kernel wider than the
    sequence) are resampled a bounded number of times.
    """
    members: list[MemberRecord] = []
    idx = 0
    for family in FAMILIES:
        for j in range(config.models_per_family):
            rng = np.random.default_rng([config.master_seed, idx])
            spec = None
            for _attempt in range(config.max_resample):
                try:
                    spec = _sample_one(config, family, rng, input_dim,
                                       vocab_size, embed_dim, max_len,
                                       name=f"{family.upper()}-{j}")
                    break
                except neural.EngineError:
                    continue
            if spec is None:
                raise EnsembleError(
                    f"could not sample a buildable {family} architecture "
                    f"after {config.max_resample} tries (sequence too short?)")
            members.append(MemberRecord(
                name=f"{family.upper()}-{j}", family=family,
                featurizer=FAMILY_FEATURIZER[family], spec=spec,
                seed=int(np.random.default_rng([config.master_seed, idx, 7]).integers(1 << 31)),
            ))
            idx += 1
    return members


def _sample_one(config, family, rng, input_dim, vocab_size, embed_dim,
                max_len, name) -> ArchitectureSpec:
    lo, hi = config.node_range
    if family == "dnn":
        n_layers = _sample_int(rng, *config.dnn_layer_range)
        layers: list[LayerSpec] = []
        for _ in range(n_layers):
            layers.append(LayerSpec(kind="dense", units=_sample_int(rng, lo, hi),
                                    activation="relu"))
            layers.append(LayerSpec(kind="dropout", rate=config.dropout))
        layers.append(LayerSpec(kind="dense", units=2))
        layers.append(LayerSpec(kind="softmax"))
        return ArchitectureSpec(name=name, input_mode="tfidf",
                                layers=tuple(layers), input_dim=input_dim)
    if family == "cnn":
        n_branches = _sample_int(rng, *config.cnn_branch_range)
        filters = _sample_int(rng, lo, hi)
        widths = tuple(range(3, 3 + n_branches))
        return neural.build_cnn(vocab_size=vocab_size, embed_dim=embed_dim,
                                kernel_widths=widths, filters=filters,
                                dropout_rate=config.dropout, max_len=max_len,
                                name=name)
    n_layers = _sample_int(rng, *config.rnn_layer_range)
    hidden = _sample_int(rng, lo, hi)
    cell = "gru" if rng.integers(2) == 0 else "lstm"
    return neural.build_rnn(cell, vocab_size=vocab_size, embed_dim=embed_dim,
                            hidden=hidden, dropout_rate=config.dropout,
                            n_layers=n_layers, max_len=max_len, name=name)


def train_ensemble(config: EnsembleConfig, data, log=None) -> EnsembleModel:
    """Train every member for ``config.epochs`` epochs.

    ``data`` bundles the featurized splits: attributes X_tfidf_{train,val,test},
    X_seq_{train,val,test}, y_{train,val,test} and embedding_matrix.

    A member whose loss diverges is retrained once on a fresh seed and then
    excluded; the vote count is kept odd by also excluding the weakest
    remaining member (lowest validation accuracy, same family preferred).
    """
    members = sample_architectures(
        config, input_dim=data.X_tfidf_train.shape[1],
        vocab_size=data.embedding_matrix.shape[0],
        embed_dim=data.embedding_matrix.shape[1],
        max_len=data.X_seq_train.shape[1])
    ensemble = EnsembleModel(members=members, config=config)

    for member in members:
        Xtr, Xva, Xte = _family_views(data, member.family)
        train_cfg = TrainConfig(epochs=config.epochs, batch_size=config.batch_size,
                                learning_rate=config.learning_rate,
                                seed=member.seed, dtype=config.dtype)
        emb = data.embedding_matrix if member.featurizer == "embedding" else None
        try:
            model, history = train_model(member.spec, Xtr, data.y_train,
                                         Xva, data.y_val, train_cfg,
                                         embedding_init=emb, log=log)
        except TrainingDiverged as exc:
            ensemble.warnings.append(f"{member.name} diverged ({exc}); retraining once")
            retry_cfg = TrainConfig(epochs=config.epochs, batch_size=config.batch_size,
                                    learning_rate=config.learning_rate,
                                    seed=member.seed + 1, dtype=config.dtype)
            try:
                model, history = train_model(member.spec, Xtr, data.y_train,
                                             Xva, data.y_val, retry_cfg,
                                             embedding_init=emb, log=log)
            except TrainingDiverged as exc2:
                ensemble.warnings.append(f"{member.name} diverged again ({exc2}); excluded")
                member.excluded = True
                continue
        member.model = model
        member.val_accuracy = history[-1].val_acc if history else 0.0
        labels, _ = model.predict(Xte)
        member.test_accuracy = float((labels == data.y_test).mean())
        if log:
            log(f"{member.name}: test accuracy {member.test_accuracy:.4f}")

    _keep_vote_count_odd(ensemble)
    return ensemble


def _family_views(data, family):
    if FAMILY_FEATURIZER[family] == "tfidf":
        return data.X_tfidf_train, data.X_tfidf_val, data.X_tfidf_test
    return data.X_seq_train, data.X_seq_val, data.X_seq_test


def _keep_vote_count_odd(ensemble: EnsembleModel) -> None:
    active = ensemble.active_members()
    if len(active) % 2 == 1:
        return
    excluded_families = {m.family for m in ensemble.members if m.excluded}
    pool = [m for m in active if m.family in excluded_families] or active
    weakest = min(pool, key=lambda m: (m.val_accuracy if m.val_accuracy is not None else 0.0,
                                       -ensemble.members.index(m)))
    weakest.excluded = True
    ensemble.warnings.append(
        f"{weakest.name} excluded to keep the vote count odd")


def vote(predictions: list[np.ndarray]) -> np.ndarray:
    """Per-document majority over an odd number of binary label vectors."""
    if not predictions:
        raise EnsembleError("no member predictions to vote over")
    if len(predictions) % 2 == 0:
        raise EnsembleError("vote needs an odd member count")
    length = len(predictions[0])
    for p in predictions:
        if len(p) != length:
            raise EnsembleError("member prediction lengths differ")
    stacked = np.stack(predictions)
    return (stacked.sum(axis=0) * 2 > len(predictions)).astype(np.int64)


def predict_ensemble(ensemble: EnsembleModel, X_tfidf, X_seq) -> np.ndarray:
    preds = []
    for member in ensemble.active_members():
        X = X_tfidf if member.featurizer == "tfidf" else X_seq
        labels, _ = member.model.predict(X)
        preds.append(labels)
    return vote(preds)


def member_table(ensemble: EnsembleModel) -> str:
    """Per-member accuracy table (model, feature extraction, accuracy %)."""
    rows = [("Model", "Feature Extraction", "Accuracy")]
    for m in ensemble.members:
        feat = "TFIDF" if m.featurizer == "tfidf" else "Word Embeddings"
        acc = "excluded" if m.excluded or m.test_accuracy is None \
            else f"{100.0 * m.test_accuracy:.2f}"
        rows.append((m.name, feat, acc))
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    return "\n".join(f"{r[0]:<{w0}}  {r[1]:<{w1}}  {r[2]}" for r in rows)


def save_ensemble(ensemble: EnsembleModel, out_dir, meta_extra: dict | None = None) -> None:
    """A directory of member containers plus a JSON manifest."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = {"members": [], "warnings": ensemble.warnings,
                "models_per_family": ensemble.config.models_per_family,
                "epochs": ensemble.config.epochs,
                "master_seed": ensemble.config.master_seed}
    manifest.update(meta_extra or {})
    for m in ensemble.members:
        entry = {"name": m.name, "family": m.family, "featurizer": m.featurizer,
                 "seed": m.seed, "excluded": m.excluded,
                 "test_accuracy": m.test_accuracy, "val_accuracy": m.val_accuracy,
                 "architecture": m.spec.to_dict()}
        if m.model is not None:
            path = os.path.join(out_dir, f"{m.name}.ifdm")
            neural.save_neural(path, m.model, meta_extra)
            entry["container"] = os.path.basename(path)
        manifest["members"].append(entry)
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
