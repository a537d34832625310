"""The four deep architectures and their training loop.

Architectures are declarative ``ArchitectureSpec`` objects (a named list of
layer specs plus an input mode); ``NeuralModel`` instantiates them against
the engine.  TF-IDF rows feed dense stacks directly, while convolutional
and recurrent stacks see them reshaped into (chunks x chunk_size)
pseudo-time steps -- embedding-sequence inputs are index matrices.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.sparse as sp

from . import container
from .engine import (AdamState, AvgPool1D, ConcatBranches, Conv1D, Dense,
                     Dropout, Embedding, EngineError, Flatten, GRU, LSTM,
                     LayerSpec, Tensor, adam_step, backward, clip_global_norm,
                     softmax, softmax_sparse_ce)

INPUT_MODES = ("tfidf", "sequence")


class TrainingDiverged(Exception):
    """Raised when a run hits a non-finite or runaway loss."""


@dataclass(frozen=True)
class ArchitectureSpec:
    name: str
    input_mode: str
    layers: tuple[LayerSpec, ...]
    input_dim: int = 0        # tfidf mode: TF-IDF row width
    max_len: int = 0          # sequence mode: token count per document
    chunk_size: int = 0       # tfidf mode feeding conv/rnn stacks

    def __post_init__(self):
        if self.input_mode not in INPUT_MODES:
            raise EngineError(f"unknown input mode: {self.input_mode!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["layers"] = [s.to_dict() for s in self.layers]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ArchitectureSpec":
        d = dict(d)
        d["layers"] = tuple(LayerSpec.from_dict(s) for s in d["layers"])
        return cls(**d)

    def uses_recurrence(self) -> bool:
        return any(s.kind in ("gru", "lstm") for s in self.layers)


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    dtype: str = "float64"
    clip_norm: float = 5.0       # applied to recurrent architectures only
    abort_loss: float = 1e3      # early-abort threshold for runaway loss

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise EngineError("epochs and batch size must be at least 1")


# ---------------------------------------------------------------------------
# Architecture builders
# ---------------------------------------------------------------------------

def build_dnn(input_dim: int = 0, widths=(512, 256, 128, 64),
              dropout_rate: float = 0.25, input_mode: str = "tfidf",
              vocab_size: int = 0, embed_dim: int = 0, max_len: int = 0,
              name: str = "dnn") -> ArchitectureSpec:
    """Four ReLU dense layers, dropout after each, then a 2-way softmax head.

    Embedding-sequence mode prepends an embedding plus a flattening layer.
    """
    if len(widths) != 4:
        raise EngineError("the dense stack takes exactly 4 hidden widths")
    layers: list[LayerSpec] = []
    if input_mode == "sequence":
        layers += [LayerSpec(kind="embedding", vocab_size=vocab_size, embed_dim=embed_dim),
                   LayerSpec(kind="flatten")]
    for w in widths:
        layers.append(LayerSpec(kind="dense", units=w, activation="relu"))
        layers.append(LayerSpec(kind="dropout", rate=dropout_rate))
    layers.append(LayerSpec(kind="dense", units=2))
    layers.append(LayerSpec(kind="softmax"))
    return ArchitectureSpec(name=name, input_mode="tfidf" if input_mode == "tfidf" else "sequence",
                            layers=tuple(layers), input_dim=input_dim, max_len=max_len)


def build_cnn(vocab_size: int = 0, embed_dim: int = 0,
              kernel_widths=(3, 4, 5, 6, 7, 8), filters: int = 64,
              dropout_rate: float = 0.25, input_mode: str = "sequence",
              max_len: int = 128, input_dim: int = 0, chunk_size: int = 100,
              name: str = "cnn") -> ArchitectureSpec:
    """Parallel conv branches (one kernel width each), globally average
    pooled and concatenated, then dropout and the softmax head.

    TF-IDF mode drops the embedding layer and reads the row as
    (chunks x chunk_size) pseudo-time input.
    """
    time_steps = max_len if input_mode == "sequence" else math.ceil(input_dim / chunk_size)
    for w in kernel_widths:
        if w > time_steps:
            raise EngineError(
                f"conv kernel width {w} exceeds the {time_steps}-step sequence")
    branches = tuple(
        (LayerSpec(kind="conv1d", width=w, filters=filters),
         LayerSpec(kind="avgpool1d", window=0))
        for w in kernel_widths)
    layers: list[LayerSpec] = []
    if input_mode == "sequence":
        layers.append(LayerSpec(kind="embedding", vocab_size=vocab_size, embed_dim=embed_dim))
    layers.append(LayerSpec(kind="concat", branches=branches))
    layers.append(LayerSpec(kind="dropout", rate=dropout_rate))
    layers.append(LayerSpec(kind="dense", units=2))
    layers.append(LayerSpec(kind="softmax"))
    return ArchitectureSpec(name=name, input_mode=input_mode, layers=tuple(layers),
                            input_dim=input_dim, max_len=max_len,
                            chunk_size=chunk_size if input_mode == "tfidf" else 0)


def build_rnn(cell: str, vocab_size: int = 0, embed_dim: int = 0,
              hidden: int = 64, dropout_rate: float = 0.25,
              n_layers: int = 4, input_mode: str = "sequence",
              max_len: int = 128, input_dim: int = 0, chunk_size: int = 100,
              name: str | None = None) -> ArchitectureSpec:
    """Stacked recurrent layers (all but the last return sequences), each
    followed by dropout, then the softmax head."""
    if cell not in ("gru", "lstm"):
        raise EngineError(f"unknown recurrent cell: {cell!r}")
    if n_layers < 1:
        raise EngineError("need at least one recurrent layer")
    layers: list[LayerSpec] = []
    if input_mode == "sequence":
        layers.append(LayerSpec(kind="embedding", vocab_size=vocab_size, embed_dim=embed_dim))
    for i in range(n_layers):
        last = i == n_layers - 1
        layers.append(LayerSpec(kind=cell, hidden=hidden, return_sequence=not last))
        layers.append(LayerSpec(kind="dropout", rate=dropout_rate))
    layers.append(LayerSpec(kind="dense", units=2))
    layers.append(LayerSpec(kind="softmax"))
    return ArchitectureSpec(name=name or cell, input_mode=input_mode,
                            layers=tuple(layers), input_dim=input_dim,
                            max_len=max_len,
                            chunk_size=chunk_size if input_mode == "tfidf" else 0)


# ---------------------------------------------------------------------------
# Model instantiation and execution
# ---------------------------------------------------------------------------

class NeuralModel:
    """An architecture bound to parameter tensors and a dropout stream."""

    def __init__(self, spec: ArchitectureSpec, seed: int = 0,
                 dtype: str = "float64", embedding_init: np.ndarray | None = None):
        self.spec = spec
        self.seed = seed
        self.np_dtype = np.float64 if dtype == "float64" else np.float32
        self.dropout_rng = np.random.default_rng([seed, 1])
        init_rng = np.random.default_rng([seed, 0])
        self.layers = self._build_layers(spec.layers, init_rng, embedding_init)

    def _input_width(self) -> tuple:
        spec = self.spec
        if spec.input_mode == "sequence":
            return (spec.max_len,)
        if spec.chunk_size:
            t = math.ceil(spec.input_dim / spec.chunk_size)
            return (t, spec.chunk_size)
        return (spec.input_dim,)

    def _build_layers(self, layer_specs, rng, embedding_init, shape=None,
                      top: bool = True):
        shape = shape or self._input_width()
        built = []
        for i, ls in enumerate(layer_specs):
            name = f"{ls.kind}{i}"
            if ls.kind == "dense":
                if len(shape) != 1:
                    raise EngineError(
                        f"dense layer needs a flat input, got shape {shape} "
                        "(insert a flatten or pooling layer)")
                built.append(Dense(shape[0], ls.units, activation=ls.activation,
                                   rng=rng, dtype=self.np_dtype, name=name))
                shape = (ls.units,)
            elif ls.kind == "dropout":
                built.append(Dropout(ls.rate))
            elif ls.kind == "embedding":
                built.append(Embedding(ls.vocab_size, ls.embed_dim,
                                       init_matrix=embedding_init, rng=rng,
                                       dtype=self.np_dtype, name=name))
                shape = (shape[0], ls.embed_dim)
            elif ls.kind == "flatten":
                built.append(Flatten())
                shape = (int(np.prod(shape)),)
            elif ls.kind == "conv1d":
                t, c = shape
                if t < ls.width:
                    raise EngineError(
                        f"conv kernel width {ls.width} exceeds the {t}-step sequence")
                built.append(Conv1D(ls.width, c, ls.filters, rng=rng,
                                    dtype=self.np_dtype, name=name))
                shape = (t - ls.width + 1, ls.filters)
            elif ls.kind == "avgpool1d":
                built.append(AvgPool1D(ls.window))
                t, c = shape
                shape = (c,) if ls.window == 0 else (t // ls.window, c)
            elif ls.kind in ("gru", "lstm"):
                t, c = shape
                cls = GRU if ls.kind == "gru" else LSTM
                built.append(cls(c, ls.hidden, return_sequence=ls.return_sequence,
                                 rng=rng, dtype=self.np_dtype, name=name))
                shape = (t, ls.hidden) if ls.return_sequence else (ls.hidden,)
            elif ls.kind == "concat":
                branch_layers = []
                widths = []
                for branch in ls.branches:
                    sub, sub_shape = self._build_layers(branch, rng, None,
                                                        shape=shape, top=False)
                    if len(sub_shape) != 1:
                        raise EngineError("concat branches must end in flat outputs")
                    branch_layers.append(sub)
                    widths.append(sub_shape[0])
                built.append(ConcatBranches(branch_layers))
                shape = (sum(widths),)
            elif ls.kind == "softmax":
                built.append("softmax")
            else:
                raise EngineError(f"unknown layer kind: {ls.kind!r}")
        if top:
            return built
        return built, shape

    def params(self) -> list[Tensor]:
        out = []
        for layer in self.layers:
            if layer != "softmax":
                out.extend(layer.params())
        return out

    def n_params(self) -> int:
        return int(sum(p.data.size for p in self.params()))

    def _input_tensor(self, X_rows) -> Tensor:
        spec = self.spec
        if spec.input_mode == "sequence":
            return Tensor(np.asarray(X_rows, dtype=np.int64))
        if sp.issparse(X_rows):
            dense = np.asarray(X_rows.todense(), dtype=self.np_dtype)
        else:
            dense = np.asarray(X_rows, dtype=self.np_dtype)
        if spec.chunk_size:
            b, d = dense.shape
            t = math.ceil(d / spec.chunk_size)
            padded = np.zeros((b, t * spec.chunk_size), dtype=self.np_dtype)
            padded[:, :d] = dense
            dense = padded.reshape(b, t, spec.chunk_size)
        return Tensor(dense)

    def logits(self, X_rows, train: bool = False) -> Tensor:
        h = self._input_tensor(X_rows)
        for layer in self.layers:
            if layer == "softmax":
                continue  # the loss fuses softmax; predict applies it explicitly
            h = layer(h, train=train, rng=self.dropout_rng)
        return h

    def predict_proba(self, X, batch: int = 256) -> np.ndarray:
        n = X.shape[0]
        out = np.empty((n, 2), dtype=np.float64)
        for start in range(0, n, batch):
            stop = min(start + batch, n)
            logits = self.logits(X[start:stop], train=False)
            out[start:stop] = softmax(logits.data.astype(np.float64))
        return out

    def predict(self, X, batch: int = 256) -> tuple[np.ndarray, np.ndarray]:
        probs = self.predict_proba(X, batch=batch)
        return np.argmax(probs, axis=1).astype(np.int64), probs

    def get_weights(self) -> list[np.ndarray]:
        return [p.data.copy() for p in self.params()]

    def set_weights(self, weights) -> None:
        for p, w in zip(self.params(), weights):
            p.data = w.astype(p.data.dtype, copy=True)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_acc: float


def history_to_csv(history: list[EpochRecord]) -> str:
    lines = ["epoch,train_loss,train_acc,val_acc"]
    for h in history:
        lines.append(f"{h.epoch},{h.train_loss:.10f},{h.train_acc:.6f},{h.val_acc:.6f}")
    return "\n".join(lines) + "\n"


def train_model(spec: ArchitectureSpec, X_train, y_train, X_val, y_val,
                config: TrainConfig, embedding_init: np.ndarray | None = None,
                log=None) -> tuple[NeuralModel, list[EpochRecord]]:
    """Mini-batch Adam on the softmax cross-entropy.

    Records per-epoch train loss/accuracy and validation accuracy, and
    restores the weights of the best validation epoch at the end.  A
    non-finite or runaway loss aborts with the epoch/batch position.
    """
    model = NeuralModel(spec, seed=config.seed, dtype=config.dtype,
                        embedding_init=embedding_init)
    params = model.params()
    state = AdamState(learning_rate=config.learning_rate)
    shuffle_rng = np.random.default_rng([config.seed, 2])
    y_train = np.asarray(y_train, dtype=np.int64)
    y_val = np.asarray(y_val, dtype=np.int64)
    n = X_train.shape[0]
    clip = config.clip_norm if spec.uses_recurrence() else None

    history: list[EpochRecord] = []
    best_val = -1.0
    best_weights = None
    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(n)
        total_loss = 0.0
        total_correct = 0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            xb = X_train[idx]
            yb = y_train[idx]
            for p in params:
                p.zero_grad()
            try:
                logits = model.logits(xb, train=True)
                loss = softmax_sparse_ce(logits, yb)
                loss_val = float(loss.data)
                if not np.isfinite(loss_val) or loss_val > config.abort_loss:
                    raise TrainingDiverged(
                        f"{spec.name}: loss {loss_val:g} at epoch {epoch}, "
                        f"batch {start // config.batch_size}")
                backward(loss)
            except EngineError as exc:
                raise TrainingDiverged(
                    f"{spec.name}: {exc} at epoch {epoch}, "
                    f"batch {start // config.batch_size}") from exc
            if clip is not None:
                clip_global_norm(params, clip)
            adam_step(params, state)
            total_loss += loss_val * len(idx)
            total_correct += int((np.argmax(logits.data, axis=1) == yb).sum())
        val_labels, _ = model.predict(X_val, batch=max(config.batch_size, 256))
        val_acc = float((val_labels == y_val).mean()) if len(y_val) else 0.0
        rec = EpochRecord(epoch=epoch, train_loss=total_loss / n,
                          train_acc=total_correct / n, val_acc=val_acc)
        history.append(rec)
        if log:
            log(f"{spec.name} epoch {epoch}/{config.epochs}: "
                f"loss {rec.train_loss:.4f} acc {rec.train_acc:.4f} val {rec.val_acc:.4f}")
        if val_acc > best_val:
            best_val = val_acc
            best_weights = model.get_weights()
    if best_weights is not None:
        model.set_weights(best_weights)
    return model, history


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_neural(path, model: NeuralModel, meta_extra: dict | None = None) -> None:
    meta = {"family": "neural", "architecture": model.spec.to_dict(),
            "seed": model.seed}
    meta.update(meta_extra or {})
    arrays = {f"p{i}.{p.name}": p.data.astype(np.float32)
              for i, p in enumerate(model.params())}
    container.save_container(path, meta, arrays)


def load_neural(path, dtype: str = "float64") -> tuple[NeuralModel, dict]:
    meta, arrays = container.load_container(path)
    if meta.get("family") != "neural":
        raise EngineError(f"{path}: container does not hold a neural model")
    spec = ArchitectureSpec.from_dict(meta["architecture"])
    model = NeuralModel(spec, seed=int(meta.get("seed", 0)), dtype=dtype)
    weights = [arrays[k] for k in sorted(arrays, key=lambda s: int(s[1:s.index(".")]))]
    model.set_weights(weights)
    return model, meta
