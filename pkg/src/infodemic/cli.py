"""Operator entry point.

Subcommands: prepare, fetch-embeddings, train, grid, evaluate, predict,
report.  Every command resolves one RunConfig (defaults < config file <
--set overrides), echoes it into its output directory, and exits nonzero
iff an error was reported.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import hashlib
import json
import os
import sys
import time
import traceback

import numpy as np

from . import classic, container, corpus, evaluation, features, neural, preprocess, rmdl
from .config import ConfigError, RunConfig

NEURAL_KINDS = ("dnn", "cnn", "gru", "lstm")
FEATURIZERS = ("tfidf", "embedding")


class CliError(Exception):
    pass


def _hash_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _split_paths(cfg: RunConfig) -> dict[str, str]:
    if cfg.synthetic > 0:
        base = os.path.join(cfg.output_dir, "synthetic",
                            f"{cfg.synthetic}-{cfg.seed}")
        return {name: os.path.join(base, f"{name}.{cfg.file_format}")
                for name in ("train", "validation", "test")}
    out = {}
    for name in ("train", "validation", "test"):
        explicit = getattr(cfg, f"{name}_file")
        out[name] = explicit or os.path.join(cfg.data_dir, f"{name}.{cfg.file_format}")
    return out


def _ensure_synthetic(cfg: RunConfig, paths: dict[str, str]) -> None:
    base = os.path.dirname(paths["train"])
    if all(os.path.exists(p) for p in paths.values()):
        return
    corpus.generate_synthetic_corpus(base, train_size=cfg.synthetic,
                                     seed=cfg.seed, fmt=cfg.file_format)


def _preprocess_config(cfg: RunConfig) -> preprocess.PreprocessConfig:
    return preprocess.PreprocessConfig(
        drop_numeric=cfg.drop_numeric,
        stoplist_path=cfg.stoplist_path or None)


class PreparedData:
    """Cached preprocessed splits plus lazily-built feature matrices."""

    def __init__(self, cache_dir: str, cfg: RunConfig):
        self.cache_dir = cache_dir
        self.cfg = cfg
        with open(os.path.join(cache_dir, "meta.json"), encoding="utf-8") as fh:
            self.meta = json.load(fh)
        self.tokens: dict[str, list] = {}
        self.labels: dict[str, np.ndarray] = {}
        self.doc_ids: dict[str, list[str]] = {}
        for name in ("train", "validation", "test"):
            with open(os.path.join(cache_dir, f"tokens_{name}.json"), encoding="utf-8") as fh:
                rows = json.load(fh)
            self.doc_ids[name] = [r[0] for r in rows]
            self.tokens[name] = [r[2] for r in rows]
            self.labels[name] = np.array([r[1] for r in rows], dtype=np.int64)
        self.vocab = self._load_vocab()
        self._tfidf: dict[str, object] = {}
        self._mean: dict[str, np.ndarray] = {}
        self._seq: dict[tuple[str, int], np.ndarray] = {}
        self._table = None

    def _load_vocab(self) -> features.Vocabulary:
        path = os.path.join(self.cache_dir, "vocab.tsv")
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            n_docs = int(header.split("=", 1)[1])
            term_to_index = {}
            dfs = []
            for i, line in enumerate(fh):
                term, df = line.rstrip("\n").split("\t")
                term_to_index[term] = i
                dfs.append(int(df))
        return features.Vocabulary(term_to_index=term_to_index,
                                   doc_freq=np.array(dfs, dtype=np.int64),
                                   n_docs=n_docs)

    # feature views ---------------------------------------------------------
    def tfidf(self, split: str):
        if split not in self._tfidf:
            self._tfidf[split] = features.build_tfidf_matrix(
                self.tokens[split], self.vocab, l2_normalize=self.cfg.l2_normalize)
        return self._tfidf[split]

    def embedding_table(self) -> features.EmbeddingTable:
        if self._table is None:
            path = self.meta.get("embedding_file")
            if not path or not os.path.exists(path):
                raise CliError(
                    "no embedding file prepared; run `infodemic fetch-embeddings` "
                    "or set embedding_path (synthetic corpora generate one)")
            self._table = features.load_embeddings(path, self.meta["embedding_dim"])
        return self._table

    def mean_pooled(self, split: str) -> np.ndarray:
        if split not in self._mean:
            self._mean[split] = features.build_mean_matrix(
                self.tokens[split], self.embedding_table())
        return self._mean[split]

    def sequences(self, split: str, max_len: int) -> np.ndarray:
        key = (split, max_len)
        if key not in self._seq:
            self._seq[key] = features.build_sequence_matrix(
                self.tokens[split], self.embedding_table(), max_len)
        return self._seq[key]

    def hashes(self) -> dict:
        return {"vocab_hash": self.meta["vocab_hash"],
                "preprocess_hash": self.meta["preprocess_hash"]}


def cmd_prepare(cfg: RunConfig, log=print) -> str:
    """Builds (or reuses) the preprocessing cache; returns its directory."""
    paths = _split_paths(cfg)
    if cfg.synthetic > 0:
        _ensure_synthetic(cfg, paths)
    for name, p in paths.items():
        if not os.path.exists(p):
            raise CliError(f"{name} split file missing: {p} "
                           "(use --synthetic N to generate a synthetic corpus)")

    pp = _preprocess_config(cfg)
    key = hashlib.sha256()
    for name in ("train", "validation", "test"):
        key.update(_hash_file(paths[name]).encode())
    key.update(pp.content_hash().encode())
    key.update(str(cfg.min_df).encode())
    cache_dir = os.path.join(cfg.output_dir, "cache", key.hexdigest()[:16])

    if os.path.exists(os.path.join(cache_dir, "meta.json")):
        log(f"cache hit: {cache_dir}")
        prep = PreparedData(cache_dir, cfg)
        if _ensure_embeddings(cfg, prep.meta, cache_dir, log):
            with open(os.path.join(cache_dir, "meta.json"), "w", encoding="utf-8") as fh:
                json.dump(prep.meta, fh, indent=2, sort_keys=True)
        return cache_dir

    os.makedirs(cache_dir, exist_ok=True)
    columns = (cfg.id_column, cfg.text_column, cfg.label_column)
    meta = {"preprocess_hash": pp.content_hash(), "min_df": cfg.min_df,
            "splits": {}, "embedding_dim": cfg.embedding_dim}
    token_lists = {}
    for name in ("train", "validation", "test"):
        split = corpus.load_split(paths[name], fmt=cfg.file_format,
                                  columns=columns, name=name)
        for w in split.warnings:
            log(f"{name}: {w}")
        tokens = preprocess.preprocess_documents(split.texts(), pp)
        token_lists[name] = tokens
        real, fake = corpus.class_distribution(split)
        meta["splits"][name] = {"documents": len(split), "real": real, "fake": fake,
                                "skipped": len(split.warnings)}
        rows = [[d.id, d.label, tok] for d, tok in zip(split.documents, tokens)]
        with open(os.path.join(cache_dir, f"tokens_{name}.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(rows, fh)
        log(f"{name}: {len(split)} documents ({real} real / {fake} fake)")

    vocab = features.build_vocab(token_lists["train"], min_df=cfg.min_df)
    meta["vocab_hash"] = vocab.content_hash()
    meta["vocab_size"] = len(vocab)
    with open(os.path.join(cache_dir, "vocab.tsv"), "w", encoding="utf-8") as fh:
        fh.write(f"n_docs={vocab.n_docs}\n")
        for term in vocab.terms():
            fh.write(f"{term}\t{int(vocab.doc_freq[vocab.term_to_index[term]])}\n")
    log(f"vocabulary: {len(vocab)} terms over {vocab.n_docs} documents")

    _ensure_embeddings(cfg, meta, cache_dir, log)
    with open(os.path.join(cache_dir, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return cache_dir


def _ensure_embeddings(cfg: RunConfig, meta: dict, cache_dir: str, log) -> bool:
    """Resolve the embedding text file for this run; True when meta changed."""
    if meta.get("embedding_file") and os.path.exists(meta["embedding_file"]):
        return False
    path = None
    if cfg.embedding_path:
        if not os.path.exists(cfg.embedding_path):
            raise CliError(f"embedding_path not found: {cfg.embedding_path}")
        path = cfg.embedding_path
    elif cfg.synthetic > 0:
        path = os.path.join(cache_dir, "embeddings.txt")
        if not os.path.exists(path):
            stems = set()
            with open(os.path.join(cache_dir, "tokens_train.json"), encoding="utf-8") as fh:
                for _id, _label, toks in json.load(fh):
                    stems.update(toks)
            features.write_synthetic_embeddings(sorted(stems), path,
                                                dim=cfg.embedding_dim, seed=cfg.seed)
            log(f"synthetic embeddings written: {path} ({len(stems)} words)")
    else:
        cached = os.path.join(cfg.output_dir, "embeddings",
                              f"glove-{cfg.embedding_dim}d.txt")
        if os.path.exists(cached):
            path = cached
    if not path:
        return False
    meta["embedding_file"] = path
    table = features.load_embeddings(path, cfg.embedding_dim)
    for w in table.warnings[:5]:
        log(f"embeddings: {w}")
    meta["embedding_hash"] = table.content_hash()
    meta["embedding_words"] = len(table)
    return True


def cmd_fetch_embeddings(cfg: RunConfig, log=print) -> str:
    if not cfg.embedding_url and not cfg.embedding_path:
        raise CliError("set embedding_url (or embedding_path for a local file)")
    dest = os.path.join(cfg.output_dir, "embeddings")
    source = cfg.embedding_url or cfg.embedding_path
    path = features.fetch_embeddings(source, dest,
                                     sha256=cfg.embedding_sha256 or None)
    canonical = os.path.join(dest, f"glove-{cfg.embedding_dim}d.txt")
    if os.path.abspath(path) != os.path.abspath(canonical):
        if os.path.exists(canonical):
            os.remove(canonical)
        os.link(path, canonical)
    log(f"embeddings cached: {canonical}")
    return canonical


# ---------------------------------------------------------------------------
# Training cells
# ---------------------------------------------------------------------------

def _run_dir(cfg: RunConfig) -> str:
    name = cfg.run_name or (
        datetime.datetime.now().strftime("%Y%m%d-%H%M%S") + f"-{cfg.seed}")
    path = os.path.join(cfg.output_dir, name)
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(cfg.echo())
    return path


def _rnn_max_len(cfg: RunConfig) -> int:
    return cfg.max_len if cfg.paper_scale else min(cfg.max_len, cfg.rnn_max_len)


def _classic_matrices(prep: PreparedData, featurizer: str):
    if featurizer == "tfidf":
        return prep.tfidf("train"), prep.tfidf("test")
    return prep.mean_pooled("train"), prep.mean_pooled("test")


def run_classic_cell(kind: str, featurizer: str, prep: PreparedData,
                     cfg: RunConfig, cell_dir: str, log=print) -> evaluation.EvalReport:
    X_train, X_test = _classic_matrices(prep, featurizer)
    y_train = prep.labels["train"]
    y_test = prep.labels["test"]
    overrides = {
        "multinomial_nb": {"alpha": cfg.nb_alpha},
        "knn": {"k": cfg.knn_k},
        "random_forest": {"n_trees": cfg.rf_trees},
        "gradient_boost": {"n_estimators": cfg.gb_estimators,
                           "learning_rate": cfg.gb_learning_rate,
                           "max_depth": cfg.gb_max_depth},
    }[kind]
    start = time.perf_counter()
    model, fit_report = classic.fit_classifier(kind, X_train, y_train,
                                               featurizer_kind=featurizer,
                                               seed=cfg.seed, **overrides)
    labels, _scores = classic.predict_classifier(model, X_test)
    runtime = time.perf_counter() - start
    report = evaluation.EvalReport.from_labels(kind, featurizer, y_test, labels,
                                               runtime_seconds=runtime, seed=cfg.seed)
    os.makedirs(cell_dir, exist_ok=True)
    classic.save_classifier(os.path.join(cell_dir, "model.ifdm"), kind, model,
                            {"featurizer": featurizer, **prep.hashes(),
                             "max_len": cfg.max_len, "chunk_size": cfg.chunk_size})
    with open(os.path.join(cell_dir, "fit_report.json"), "w", encoding="utf-8") as fh:
        json.dump({"model": kind, "featurizer": featurizer,
                   "duration_seconds": fit_report.duration_seconds,
                   "hyperparameters": fit_report.hyperparameters,
                   "seed": fit_report.seed, "notes": fit_report.notes},
                  fh, indent=2, sort_keys=True)
    log(f"{kind} x {featurizer}: accuracy {report.accuracy:.2f}%")
    return report


def _neural_spec(kind: str, featurizer: str, prep: PreparedData, cfg: RunConfig):
    vocab_dim = len(prep.vocab)
    if featurizer == "embedding":
        table = prep.embedding_table()
        emb_rows = len(table) + 1
        emb_dim = table.dim
    max_len = _rnn_max_len(cfg) if kind in ("gru", "lstm") else cfg.max_len
    if kind == "dnn":
        widths = cfg.int_list("dnn_widths")
        if featurizer == "tfidf":
            return neural.build_dnn(input_dim=vocab_dim, widths=widths,
                                    dropout_rate=cfg.dropout)
        return neural.build_dnn(widths=widths, dropout_rate=cfg.dropout,
                                input_mode="sequence", vocab_size=emb_rows,
                                embed_dim=emb_dim, max_len=max_len)
    if kind == "cnn":
        widths = cfg.int_list("cnn_kernel_widths")
        if featurizer == "tfidf":
            return neural.build_cnn(kernel_widths=widths, filters=cfg.cnn_filters,
                                    dropout_rate=cfg.dropout, input_mode="tfidf",
                                    input_dim=vocab_dim, chunk_size=cfg.chunk_size)
        return neural.build_cnn(vocab_size=emb_rows, embed_dim=emb_dim,
                                kernel_widths=widths, filters=cfg.cnn_filters,
                                dropout_rate=cfg.dropout, max_len=max_len)
    cell = kind
    if featurizer == "tfidf":
        return neural.build_rnn(cell, hidden=cfg.rnn_hidden, n_layers=cfg.rnn_layers,
                                dropout_rate=cfg.dropout, input_mode="tfidf",
                                input_dim=vocab_dim, chunk_size=cfg.chunk_size,
                                name=cell)
    return neural.build_rnn(cell, vocab_size=emb_rows, embed_dim=emb_dim,
                            hidden=cfg.rnn_hidden, n_layers=cfg.rnn_layers,
                            dropout_rate=cfg.dropout, max_len=max_len, name=cell)


def _neural_inputs(kind: str, featurizer: str, prep: PreparedData, cfg: RunConfig):
    if featurizer == "tfidf":
        return (prep.tfidf("train"), prep.tfidf("validation"), prep.tfidf("test"))
    max_len = _rnn_max_len(cfg) if kind in ("gru", "lstm") else cfg.max_len
    return (prep.sequences("train", max_len),
            prep.sequences("validation", max_len),
            prep.sequences("test", max_len))


def run_neural_cell(kind: str, featurizer: str, prep: PreparedData,
                    cfg: RunConfig, cell_dir: str, log=print) -> evaluation.EvalReport:
    spec = _neural_spec(kind, featurizer, prep, cfg)
    X_train, X_val, X_test = _neural_inputs(kind, featurizer, prep, cfg)
    emb_init = (prep.embedding_table().matrix()
                if featurizer == "embedding" else None)
    train_cfg = neural.TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size,
                                   learning_rate=cfg.learning_rate,
                                   seed=cfg.seed, dtype=cfg.dtype)
    start = time.perf_counter()
    model, history = neural.train_model(spec, X_train, prep.labels["train"],
                                        X_val, prep.labels["validation"],
                                        train_cfg, embedding_init=emb_init, log=log)
    labels, _probs = model.predict(X_test)
    runtime = time.perf_counter() - start
    report = evaluation.EvalReport.from_labels(kind, featurizer,
                                               prep.labels["test"], labels,
                                               runtime_seconds=runtime, seed=cfg.seed)
    os.makedirs(cell_dir, exist_ok=True)
    neural.save_neural(os.path.join(cell_dir, "model.ifdm"), model,
                       {"featurizer": featurizer, "model_kind": kind,
                        **prep.hashes(), "max_len": spec.max_len,
                        "chunk_size": spec.chunk_size})
    with open(os.path.join(cell_dir, "history.csv"), "w", encoding="utf-8") as fh:
        fh.write(neural.history_to_csv(history))
    log(f"{kind} x {featurizer}: accuracy {report.accuracy:.2f}% "
        f"({model.n_params()} parameters)")
    return report


def run_rmdl_cell(prep: PreparedData, cfg: RunConfig, cell_dir: str,
                  log=print) -> tuple[evaluation.EvalReport, rmdl.EnsembleModel]:
    max_len = _rnn_max_len(cfg)
    data = rmdl.EnsembleData(
        X_tfidf_train=prep.tfidf("train"), X_tfidf_val=prep.tfidf("validation"),
        X_tfidf_test=prep.tfidf("test"),
        X_seq_train=prep.sequences("train", max_len),
        X_seq_val=prep.sequences("validation", max_len),
        X_seq_test=prep.sequences("test", max_len),
        y_train=prep.labels["train"], y_val=prep.labels["validation"],
        y_test=prep.labels["test"],
        embedding_matrix=prep.embedding_table().matrix())
    ens_cfg = rmdl.EnsembleConfig(
        models_per_family=cfg.rmdl_models_per_family, epochs=cfg.rmdl_epochs,
        dnn_layer_range=cfg.int_range("rmdl_dnn_layers"),
        cnn_branch_range=cfg.int_range("rmdl_cnn_branches"),
        rnn_layer_range=cfg.int_range("rmdl_rnn_layers"),
        node_range=cfg.int_range("rmdl_node_range"),
        dropout=cfg.dropout, master_seed=cfg.seed, batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate, dtype=cfg.dtype)
    start = time.perf_counter()
    ensemble = rmdl.train_ensemble(ens_cfg, data, log=log)
    combined = rmdl.predict_ensemble(ensemble, data.X_tfidf_test, data.X_seq_test)
    runtime = time.perf_counter() - start
    report = evaluation.EvalReport.from_labels("rmdl", "combined",
                                               data.y_test, combined,
                                               runtime_seconds=runtime, seed=cfg.seed)
    os.makedirs(cell_dir, exist_ok=True)
    rmdl.save_ensemble(ensemble, cell_dir, prep.hashes())
    table = rmdl.member_table(ensemble)
    with open(os.path.join(cell_dir, "members.txt"), "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    log(table)
    log(f"rmdl combined: accuracy {report.accuracy:.2f}%")
    return report, ensemble


def cmd_train(cfg: RunConfig, model_kind: str, featurizer: str, log=print) -> str:
    if featurizer not in FEATURIZERS:
        raise CliError(f"unknown featurizer: {featurizer!r}")
    if model_kind == "multinomial_nb" and featurizer == "embedding":
        raise CliError("multinomial_nb + embedding is not a valid pair: pooled "
                       "embeddings contain negative values, which the "
                       "multinomial likelihood cannot absorb")
    cache_dir = cmd_prepare(cfg, log=log)
    prep = PreparedData(cache_dir, cfg)
    run_dir = _run_dir(cfg)
    cell_dir = os.path.join(run_dir, f"{model_kind}-{featurizer}")
    if model_kind in classic.MODEL_KINDS:
        report = run_classic_cell(model_kind, featurizer, prep, cfg, cell_dir, log=log)
    elif model_kind in NEURAL_KINDS:
        report = run_neural_cell(model_kind, featurizer, prep, cfg, cell_dir, log=log)
    elif model_kind == "rmdl":
        report, _ = run_rmdl_cell(prep, cfg, cell_dir, log=log)
    else:
        raise CliError(f"unknown model kind: {model_kind!r}")
    with open(os.path.join(cell_dir, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(evaluation.reports_to_csv([report]))
    return run_dir


def _grid_cells(cfg: RunConfig, only: set[str] | None):
    cells = []
    for kind in classic.MODEL_KINDS:
        for feat in FEATURIZERS:
            if kind == "multinomial_nb" and feat == "embedding":
                continue
            cells.append((kind, feat))
    for kind in NEURAL_KINDS:
        for feat in FEATURIZERS:
            cells.append((kind, feat))
    cells.append(("rmdl", "combined"))
    if only:
        cells = [(k, f) for k, f in cells if k in only]
    return cells


def cmd_grid(cfg: RunConfig, only: set[str] | None = None, log=print) -> str:
    cache_dir = cmd_prepare(cfg, log=log)
    prep = PreparedData(cache_dir, cfg)
    run_dir = _run_dir(cfg)
    cells = _grid_cells(cfg, only)
    reports: list[evaluation.EvalReport] = []
    failures: list[str] = []

    def run_cell(cell):
        kind, feat = cell
        cell_dir = os.path.join(run_dir, "cells", f"{kind}-{feat}")
        if kind == "rmdl":
            return run_rmdl_cell(prep, cfg, cell_dir, log=log)[0]
        if kind in classic.MODEL_KINDS:
            return run_classic_cell(kind, feat, prep, cfg, cell_dir, log=log)
        return run_neural_cell(kind, feat, prep, cfg, cell_dir, log=log)

    if cfg.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {pool.submit(run_cell, cell): cell for cell in cells}
            for fut in concurrent.futures.as_completed(futures):
                cell = futures[fut]
                try:
                    reports.append(fut.result())
                except Exception as exc:  # cell failures recorded, grid continues
                    failures.append(f"{cell[0]} x {cell[1]}: {exc}")
    else:
        for cell in cells:
            try:
                reports.append(run_cell(cell))
            except Exception as exc:
                failures.append(f"{cell[0]} x {cell[1]}: {exc}")
                log(f"cell failed: {cell[0]} x {cell[1]}: {exc}")

    table = evaluation.comparison_table(reports)
    warnings = _directional_warnings(reports)
    with open(os.path.join(run_dir, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(evaluation.reports_to_csv(reports))
    with open(os.path.join(run_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"positive class for precision/recall: {evaluation.EvalReport.POSITIVE_CLASS}\n")
        fh.write("pooled-embedding inputs for conventional models use mean pooling\n")
        fh.write("TF-IDF rows feed conv/recurrent stacks as (chunks x "
                 f"{cfg.chunk_size}) pseudo-time steps\n\n")
        fh.write(table)
        fh.write("\n")
        for w in warnings:
            fh.write(f"warning: {w}\n")
        for f in failures:
            fh.write(f"failed: {f}\n")
        fh.write("\nruntimes (seconds):\n")
        for rep in reports:
            fh.write(f"  {rep.model_kind} x {rep.featurizer_kind}: "
                     f"{rep.runtime_seconds:.1f}\n")
    log("\n" + table)
    for w in warnings:
        log(f"warning: {w}")
    return run_dir


def _directional_warnings(reports) -> list[str]:
    """TF-IDF is expected to beat pooled embeddings for the conventional
    models; a violation is reported, not failed (it is an empirical claim)."""
    acc = {(r.model_kind, r.featurizer_kind): r.accuracy for r in reports}
    out = []
    for kind in ("random_forest", "knn", "gradient_boost"):
        t = acc.get((kind, "tfidf"))
        e = acc.get((kind, "embedding"))
        if t is not None and e is not None and t < e:
            out.append(f"{kind}: embedding accuracy {e:.2f} exceeded TF-IDF {t:.2f}")
    return out


# ---------------------------------------------------------------------------
# Evaluate / predict / report
# ---------------------------------------------------------------------------

def _load_any_model(path):
    meta, _ = container.load_container(path)
    if meta.get("family") == "neural":
        model, meta = neural.load_neural(path)
        return meta.get("model_kind", "neural"), model, meta
    kind, model, meta = classic.load_classifier(path)
    return kind, model, meta


def _featurize_for_model(meta: dict, prep: PreparedData, tokens, cfg: RunConfig):
    featurizer = meta.get("featurizer", "tfidf")
    if featurizer == "tfidf":
        return features.build_tfidf_matrix(tokens, prep.vocab,
                                           l2_normalize=cfg.l2_normalize)
    if meta.get("family") == "neural":
        max_len = int(meta.get("max_len") or cfg.max_len)
        return features.build_sequence_matrix(tokens, prep.embedding_table(), max_len)
    return features.build_mean_matrix(tokens, prep.embedding_table())


def _predict_any(kind, model, X):
    if isinstance(model, neural.NeuralModel):
        labels, probs = model.predict(X)
        return labels, probs[:, 1]
    return classic.predict_classifier(model, X)


def cmd_evaluate(cfg: RunConfig, container_path: str, split: str = "test",
                 log=print) -> evaluation.EvalReport:
    cache_dir = cmd_prepare(cfg, log=log)
    prep = PreparedData(cache_dir, cfg)
    kind, model, meta = _load_any_model(container_path)
    container.verify_pipeline_hashes(meta, prep.meta.get("vocab_hash"),
                                     prep.meta.get("preprocess_hash"))
    X = _featurize_for_model(meta, prep, prep.tokens[split], cfg)
    start = time.perf_counter()
    labels, _scores = _predict_any(kind, model, X)
    runtime = time.perf_counter() - start
    report = evaluation.EvalReport.from_labels(
        kind, meta.get("featurizer", "tfidf"), prep.labels[split], labels,
        runtime_seconds=runtime, seed=cfg.seed)
    log(f"{kind} on {split}: accuracy {report.accuracy:.2f}% "
        f"precision {report.precision:.2f}% recall {report.recall:.2f}% "
        f"f1 {report.f1:.2f}%")
    return report


def cmd_predict(cfg: RunConfig, container_path: str, input_path: str,
                output_path: str | None = None, log=print) -> str:
    cache_dir = cmd_prepare(cfg, log=log)
    prep = PreparedData(cache_dir, cfg)
    kind, model, meta = _load_any_model(container_path)
    container.verify_pipeline_hashes(meta, prep.meta.get("vocab_hash"),
                                     prep.meta.get("preprocess_hash"))

    import csv as _csv
    pp = _preprocess_config(cfg)
    ids, texts = [], []
    skipped = 0
    with open(input_path, newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        if reader.fieldnames is not None and cfg.text_column not in reader.fieldnames:
            raise CliError(f"{input_path}: no {cfg.text_column!r} column in header")
        for row in reader:
            text = (row.get(cfg.text_column) or "").strip()
            if not text:
                skipped += 1
                continue
            ids.append((row.get(cfg.id_column) or "").strip() or str(len(ids)))
            texts.append(text)
    if skipped:
        log(f"skipped {skipped} malformed rows")

    output_path = output_path or os.path.splitext(input_path)[0] + ".predictions.csv"
    if texts:
        tokens = preprocess.preprocess_documents(texts, pp)
        X = _featurize_for_model(meta, prep, tokens, cfg)
        labels, scores = _predict_any(kind, model, X)
    else:
        labels, scores = np.empty(0, np.int64), np.empty(0)
    with open(output_path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["id", "predicted_label", "score"])
        for doc_id, label, score in zip(ids, labels, scores):
            writer.writerow([doc_id, corpus.LABEL_TO_NAME[int(label)], f"{score:.6f}"])
    log(f"wrote {len(ids)} predictions to {output_path}")
    return output_path


def cmd_report(run_dir: str, log=print) -> str:
    path = os.path.join(run_dir, "report.txt")
    if not os.path.exists(path):
        raise CliError(f"no report found under {run_dir}")
    with open(path, encoding="utf-8") as fh:
        content = fh.read()
    log(content)
    return content


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infodemic",
        description="Misinformation-detection workbench: preprocessing, "
                    "TF-IDF/embedding features, conventional and neural "
                    "classifiers, and an ensemble, with comparative reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--synthetic", type=int, metavar="N",
                       help="generate/use a synthetic corpus with N training docs")
        p.add_argument("--paper-scale", action="store_true",
                       help="lift the reduced recurrent-profile caps")
        p.add_argument("--data-dir", help="directory holding the split files")
        p.add_argument("--output-dir", help="base output directory")
        p.add_argument("--run-name", help="fixed run directory name")

    p = sub.add_parser("prepare", help="preprocess splits, build vocabulary and caches")
    common(p)

    p = sub.add_parser("fetch-embeddings", help="download/caches the embedding file")
    common(p)
    p.add_argument("--url", help="embedding archive or text file URL")
    p.add_argument("--sha256", help="expected archive checksum")

    p = sub.add_parser("train", help="train one (model, featurizer) cell")
    common(p)
    p.add_argument("model", choices=list(classic.MODEL_KINDS) + list(NEURAL_KINDS) + ["rmdl"])
    p.add_argument("featurizer", nargs="?", default="tfidf",
                   choices=["tfidf", "embedding", "combined"])

    p = sub.add_parser("grid", help="run every valid cell plus the ensemble")
    common(p)
    p.add_argument("--only", help="comma-separated model kinds to keep")
    p.add_argument("--workers", type=int, help="concurrent cells")

    p = sub.add_parser("evaluate", help="evaluate a saved model on a split")
    common(p)
    p.add_argument("container", help="path to a .ifdm model container")
    p.add_argument("--split", default="test", choices=["train", "validation", "test"])

    p = sub.add_parser("predict", help="label a CSV of posts with a saved model")
    common(p)
    p.add_argument("container", help="path to a .ifdm model container")
    p.add_argument("input", help="CSV with id and text columns")
    p.add_argument("--output", help="output CSV path")

    p = sub.add_parser("report", help="print the report of a finished run")
    common(p)
    p.add_argument("run_dir", help="run directory containing report.txt")
    return parser


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    for key, attr in (("seed", "seed"), ("synthetic", "synthetic"),
                      ("data_dir", "data_dir"), ("output_dir", "output_dir"),
                      ("run_name", "run_name")):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "paper_scale", False):
        overrides["paper_scale"] = True
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "url", None):
        overrides["embedding_url"] = args.url
    if getattr(args, "sha256", None):
        overrides["embedding_sha256"] = args.sha256
    return RunConfig.load(args.config, overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "prepare":
            cmd_prepare(cfg)
        elif args.command == "fetch-embeddings":
            cmd_fetch_embeddings(cfg)
        elif args.command == "train":
            cmd_train(cfg, args.model, args.featurizer)
        elif args.command == "grid":
            only = set(args.only.split(",")) if args.only else None
            cmd_grid(cfg, only=only)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.container, split=args.split)
        elif args.command == "predict":
            cmd_predict(cfg, args.container, args.input, output_path=args.output)
        elif args.command == "report":
            cmd_report(args.run_dir)
        return 0
    except (CliError, ConfigError, corpus.CorpusError, features.FeatureError,
            classic.ModelError, container.ContainerError,
            evaluation.EvaluationError, rmdl.EnsembleError,
            neural.TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
