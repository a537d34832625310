"""Featurization: vocabularies, TF-IDF rows, embedding pooling, sequences.

TF-IDF weighting per document d and term t:

    TF(d,t)  = count(t in d) / |d|
    IDF(t)   = ln(N / f(t))        N = training docs, f(t) = docs containing t
    W(d,t)   = TF(d,t) * IDF(t)

No smoothing terms; the vocabulary and document frequencies come from the
training split only, and inference-time terms outside it are dropped.
"""

from __future__ import annotations

import hashlib
import math
import os
import urllib.request
import zipfile
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .preprocess import TokenSequence


class FeatureError(Exception):
    pass


@dataclass
class Vocabulary:
    """Train-split term index with per-term document frequencies."""

    term_to_index: dict[str, int]
    doc_freq: np.ndarray  # int64, aligned with the index
    n_docs: int

    def __len__(self) -> int:
        return len(self.term_to_index)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_index

    def idf_array(self) -> np.ndarray:
        return np.log(self.n_docs / self.doc_freq.astype(np.float64))

    def terms(self) -> list[str]:
        out = [""] * len(self.term_to_index)
        for t, i in self.term_to_index.items():
            out[i] = t
        return out

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.n_docs).encode())
        for term in self.terms():
            h.update(b"\n")
            h.update(term.encode("utf-8"))
            h.update(b"\t")
            h.update(str(int(self.doc_freq[self.term_to_index[term]])).encode())
        return h.hexdigest()


@dataclass(frozen=True)
class SparseVector:
    """Strictly-increasing (index, weight) pairs; zeros are never stored."""

    indices: np.ndarray  # int32
    weights: np.ndarray  # float64
    dim: int

    def get(self, index: int) -> float:
        pos = np.searchsorted(self.indices, index)
        if pos < len(self.indices) and self.indices[pos] == index:
            return float(self.weights[pos])
        return 0.0

    def nnz(self) -> int:
        return len(self.indices)


def build_vocab(train_docs: list[TokenSequence], min_df: int = 1) -> Vocabulary:
    """Index every term whose document frequency is at least ``min_df``.

    Index order is lexicographic, so two builds over the same corpus are
    identical.  Must be called with training documents only.
    """
    if not train_docs:
        raise FeatureError("cannot build a vocabulary from an empty corpus")
    df: Counter[str] = Counter()
    for doc in train_docs:
        df.update(set(doc))
    terms = sorted(t for t, c in df.items() if c >= min_df)
    return Vocabulary(
        term_to_index={t: i for i, t in enumerate(terms)},
        doc_freq=np.array([df[t] for t in terms], dtype=np.int64),
        n_docs=len(train_docs),
    )


def term_frequency(doc: TokenSequence, term: str) -> float:
    """count(term in doc) / len(doc); undefined for an empty document."""
    if not doc:
        raise FeatureError("term frequency of an empty document is undefined")
    return doc.count(term) / len(doc)


def inverse_doc_frequency(vocab: Vocabulary, term: str) -> float:
    """ln(N / f(term)); the term must be in the vocabulary."""
    if term not in vocab.term_to_index:
        raise FeatureError(f"term not in vocabulary: {term!r}")
    return math.log(vocab.n_docs / int(vocab.doc_freq[vocab.term_to_index[term]]))


def tfidf_vector(doc: TokenSequence, vocab: Vocabulary) -> SparseVector:
    """TF-IDF weights of one document; out-of-vocabulary terms are ignored."""
    if not doc:
        return SparseVector(np.empty(0, np.int32), np.empty(0, np.float64), len(vocab))
    length = len(doc)
    counts: Counter[str] = Counter(doc)
    idx = []
    wts = []
    for term, cnt in counts.items():
        col = vocab.term_to_index.get(term)
        if col is None:
            continue
        w = (cnt / length) * math.log(vocab.n_docs / int(vocab.doc_freq[col]))
        if w != 0.0:
            idx.append(col)
            wts.append(w)
    order = np.argsort(np.array(idx, dtype=np.int32), kind="stable")
    return SparseVector(
        np.array(idx, dtype=np.int32)[order],
        np.array(wts, dtype=np.float64)[order],
        len(vocab),
    )


def build_tfidf_matrix(docs: list[TokenSequence], vocab: Vocabulary,
                       l2_normalize: bool = False) -> sp.csr_matrix:
    """Stack per-document TF-IDF rows into a CSR matrix."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for doc in docs:
        vec = tfidf_vector(doc, vocab)
        indices.extend(vec.indices.tolist())
        data.extend(vec.weights.tolist())
        indptr.append(len(indices))
    X = sp.csr_matrix(
        (np.array(data, dtype=np.float64),
         np.array(indices, dtype=np.int32),
         np.array(indptr, dtype=np.int32)),
        shape=(len(docs), len(vocab)),
    )
    if l2_normalize:
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1))).ravel()
        norms[norms == 0] = 1.0
        X = sp.diags(1.0 / norms) @ X
        X = X.tocsr()
    return X


# ---------------------------------------------------------------------------
# Pretrained word embeddings
# ---------------------------------------------------------------------------

@dataclass
class EmbeddingTable:
    """word -> dense vector map with a reserved padding index 0.

    Sequence indices are assigned to the sorted token list, so the index
    space is a pure function of the vocabulary in the file.  The loader
    policy for out-of-vocabulary tokens is "drop".
    """

    vectors: dict[str, np.ndarray]
    dim: int
    oov_policy: str = "drop"
    warnings: list[str] = field(default_factory=list)
    _index: dict[str, int] = field(default=None, repr=False)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[word]

    def token_index(self) -> dict[str, int]:
        if self._index is None:
            self._index = {w: i + 1 for i, w in enumerate(sorted(self.vectors))}
        return self._index

    def matrix(self) -> np.ndarray:
        """[n_words + 1, dim] float32; row 0 is the all-zero padding row."""
        out = np.zeros((len(self.vectors) + 1, self.dim), dtype=np.float32)
        for word, i in self.token_index().items():
            out[i] = self.vectors[word]
        return out

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.dim).encode())
        for w in sorted(self.vectors):
            h.update(b"\n")
            h.update(w.encode("utf-8"))
            h.update(self.vectors[w].tobytes())
        return h.hexdigest()


def load_embeddings(path, expected_dim: int = 50) -> EmbeddingTable:
    """Parse a text embedding file: token then ``expected_dim`` floats per line.

    Malformed lines (wrong component count, non-finite values) are skipped
    and recorded in ``table.warnings``; duplicate tokens keep the first
    occurrence.
    """
    vectors: dict[str, np.ndarray] = {}
    warnings: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) <= 1 and not line.strip():
                continue
            token, comps = parts[0], parts[1:]
            if len(comps) != expected_dim:
                warnings.append(
                    f"line {line_no}: expected {expected_dim} components, got {len(comps)}")
                continue
            try:
                vec = np.array([float(c) for c in comps], dtype=np.float32)
            except ValueError:
                warnings.append(f"line {line_no}: unparseable component")
                continue
            if not np.all(np.isfinite(vec)):
                warnings.append(f"line {line_no}: non-finite component")
                continue
            if token in vectors:
                continue
            vectors[token] = vec
    if not vectors:
        warnings.append("embedding file contained no usable entries")
    return EmbeddingTable(vectors=vectors, dim=expected_dim, warnings=warnings)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def nearest_neighbor(table: EmbeddingTable, word: str, candidates) -> str:
    """Closest candidate to ``word`` by cosine over the loaded vectors."""
    ref = table.vector(word)
    best, best_sim = None, -np.inf
    for cand in candidates:
        sim = cosine_similarity(ref, table.vector(cand))
        if sim > best_sim:
            best, best_sim = cand, sim
    return best


def embed_mean(doc: TokenSequence, table: EmbeddingTable) -> np.ndarray:
    """Mean of the vectors of in-table tokens; zero vector when none match."""
    vecs = [table.vectors[t] for t in doc if t in table.vectors]
    if not vecs:
        return np.zeros(table.dim, dtype=np.float64)
    return np.mean(np.asarray(vecs, dtype=np.float64), axis=0)


def build_mean_matrix(docs: list[TokenSequence], table: EmbeddingTable) -> np.ndarray:
    return np.stack([embed_mean(d, table) for d in docs])


@dataclass(frozen=True)
class IndexSequence:
    """Fixed-length token-index encoding; positions past true_length are 0."""

    indices: np.ndarray  # int32, length = max_len
    true_length: int


def encode_sequence(doc: TokenSequence, table: EmbeddingTable,
                    max_len: int = 128) -> IndexSequence:
    """First ``max_len`` in-table tokens as indices, right-padded with 0."""
    if max_len < 1:
        raise FeatureError("max_len must be at least 1")
    index = table.token_index()
    ids = [index[t] for t in doc if t in index][:max_len]
    out = np.zeros(max_len, dtype=np.int32)
    out[:len(ids)] = ids
    return IndexSequence(indices=out, true_length=len(ids))


def build_sequence_matrix(docs: list[TokenSequence], table: EmbeddingTable,
                          max_len: int = 128) -> np.ndarray:
    return np.stack([encode_sequence(d, table, max_len).indices for d in docs])


# ---------------------------------------------------------------------------
# Embedding acquisition
# ---------------------------------------------------------------------------

def write_synthetic_embeddings(words, path, dim: int = 50, seed: int = 0) -> None:
    """Deterministic stand-in embedding file over the given word list."""
    rng = np.random.default_rng(seed)
    with open(path, "w", encoding="utf-8") as fh:
        for word in sorted(set(words)):
            vec = rng.standard_normal(dim) * 0.4
            comps = " ".join(f"{v:.5f}" for v in vec)
            fh.write(f"{word} {comps}\n")


def fetch_embeddings(url: str, cache_dir, sha256: str | None = None,
                     archive_member: str | None = None) -> str:
    """Download (or copy) an embedding file into the cache, verifying its hash.

    Supports plain text files and zip archives (``archive_member`` selects
    the file inside; default: the first ``.txt`` member).  Local paths and
    file:// URLs work offline.  Returns the path of the cached text file.
    """
    os.makedirs(cache_dir, exist_ok=True)
    fname = os.path.basename(url.rstrip("/")) or "embeddings"
    blob_path = os.path.join(cache_dir, fname)

    if not os.path.exists(blob_path):
        if "://" not in url:
            if not os.path.exists(url):
                raise FeatureError(f"embedding source not found: {url}")
            with open(url, "rb") as src, open(blob_path, "wb") as dst:
                dst.write(src.read())
        else:
            with urllib.request.urlopen(url) as resp, open(blob_path, "wb") as dst:
                while True:
                    chunk = resp.read(1 << 20)
                    if not chunk:
                        break
                    dst.write(chunk)

    if sha256 is not None:
        h = hashlib.sha256()
        with open(blob_path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
        if h.hexdigest() != sha256:
            os.remove(blob_path)
            raise FeatureError(
                f"checksum mismatch for {url}: got {h.hexdigest()}, expected {sha256}")

    if blob_path.endswith(".zip"):
        with zipfile.ZipFile(blob_path) as zf:
            member = archive_member
            if member is None:
                txt = [n for n in zf.namelist() if n.endswith(".txt")]
                if not txt:
                    raise FeatureError(f"no .txt member found in {blob_path}")
                member = txt[0]
            out_path = os.path.join(cache_dir, os.path.basename(member))
            if not os.path.exists(out_path):
                with zf.open(member) as src, open(out_path, "wb") as dst:
                    dst.write(src.read())
        return out_path
    return blob_path
