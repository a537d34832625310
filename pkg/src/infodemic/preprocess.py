"""Deterministic text normalisation: cleaning, stopword removal, stemming.

The pipeline turns a raw social-media post into a token sequence in four
fixed stages:

    clean  ->  tokenize  ->  remove_stopwords  ->  stem

All stages are pure functions, so mapping them over documents in parallel
cannot change results.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources

from . import _snowball

TokenSequence = list[str]

_URL_RE = re.compile(r"(?:https?://|www\.|t\.co/)\S+")
_WS_RE = re.compile(r"\s+")
_NON_ALNUM_RE = re.compile(r"[^a-z0-9 ]+")
_DIGIT_RE = re.compile(r"\d")

DEFAULT_STOPLIST_SIZE = 179


@dataclass(frozen=True)
class Stoplist:
    """A set of lowercase words to drop before featurization."""

    words: frozenset[str]

    def __contains__(self, token: str) -> bool:
        return token in self.words

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def from_file(cls, path) -> "Stoplist":
        with open(path, encoding="utf-8") as fh:
            words = frozenset(line.strip() for line in fh if line.strip())
        return cls(words)

    @classmethod
    def default(cls) -> "Stoplist":
        ref = resources.files("infodemic.data").joinpath("stopwords_en.txt")
        words = frozenset(
            line.strip() for line in ref.read_text("utf-8").splitlines() if line.strip()
        )
        return cls(words)


@dataclass(frozen=True)
class PreprocessConfig:
    """Pipeline knobs.

    drop_numeric removes digit-bearing tokens just before stemming; the
    default mirrors how numeric tokens like "734k" vanish at that stage.
    """

    drop_numeric: bool = True
    stoplist_path: str | None = None
    _stoplist: Stoplist = field(init=False, repr=False, compare=False, default=None)

    def stoplist(self) -> Stoplist:
        if self._stoplist is None:
            loaded = (Stoplist.from_file(self.stoplist_path)
                      if self.stoplist_path else Stoplist.default())
            object.__setattr__(self, "_stoplist", loaded)
        return self._stoplist

    def content_hash(self) -> str:
        """Hash of the behaviour-relevant settings, including stoplist text."""
        h = hashlib.sha256()
        h.update(b"drop_numeric=1" if self.drop_numeric else b"drop_numeric=0")
        for w in sorted(self.stoplist().words):
            h.update(b"\n")
            h.update(w.encode("utf-8"))
        return h.hexdigest()


def clean(text: str) -> str:
    """Lowercase, strip URLs, drop everything outside [a-z0-9 ], tidy spaces."""
    text = text.lower()
    text = _URL_RE.sub(" ", text)
    text = _WS_RE.sub(" ", text)
    text = _NON_ALNUM_RE.sub("", text)
    return _WS_RE.sub(" ", text).strip()


def tokenize(text: str) -> TokenSequence:
    """Split cleaned text on whitespace runs."""
    return text.split()


def remove_stopwords(tokens: TokenSequence, stoplist: Stoplist) -> TokenSequence:
    return [t for t in tokens if t not in stoplist]


def stem(tokens: TokenSequence, drop_numeric: bool = True) -> TokenSequence:
    """Snowball-stem each token; optionally drop digit-bearing tokens first."""
    if drop_numeric:
        tokens = [t for t in tokens if not _DIGIT_RE.search(t)]
    return [_snowball.stem(t) for t in tokens]


def pipeline(text: str, config: PreprocessConfig | None = None) -> TokenSequence:
    """Full normalisation of one raw document."""
    config = config or PreprocessConfig()
    tokens = tokenize(clean(text))
    tokens = remove_stopwords(tokens, config.stoplist())
    return stem(tokens, drop_numeric=config.drop_numeric)


def preprocess_documents(texts, config: PreprocessConfig | None = None) -> list[TokenSequence]:
    config = config or PreprocessConfig()
    return [pipeline(t, config) for t in texts]
