"""Dataset ingestion: labelled splits of short posts, plus a synthetic twin.

Input files are UTF-8 CSV (RFC 4180 quoting; posts contain commas and
quotes) or TSV (quoting disabled) with a header row naming an id column, a
text column and a label column.  Labels "fake" and "real" map to 0 and 1.

When the real dataset is not on disk, ``generate_synthetic_corpus`` writes
splits with the same file layout and class balance from two keyword-biased
unigram distributions, so every downstream stage stays runnable.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

LABEL_FAKE = 0
LABEL_REAL = 1

_LABEL_NAMES = {"fake": LABEL_FAKE, "real": LABEL_REAL}
LABEL_TO_NAME = {LABEL_FAKE: "fake", LABEL_REAL: "real"}

DEFAULT_COLUMNS = ("id", "tweet", "label")


class CorpusError(Exception):
    """Fatal ingestion problem (missing file, missing column, duplicate id)."""


@dataclass(frozen=True)
class LabeledDocument:
    id: str
    text: str
    label: int


@dataclass
class DatasetSplit:
    """Documents of one split, in exact file order."""

    name: str
    documents: list[LabeledDocument]
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.documents)

    def texts(self) -> list[str]:
        return [d.text for d in self.documents]

    def labels(self) -> np.ndarray:
        return np.array([d.label for d in self.documents], dtype=np.int64)


def parse_label(raw: str) -> int:
    """"fake"/"real" (any case, surrounding space ignored) -> 0/1."""
    key = raw.strip().lower()
    if key not in _LABEL_NAMES:
        raise ValueError(f"unknown label string: {raw!r}")
    return _LABEL_NAMES[key]


def load_split(path, fmt: str = "csv", columns=DEFAULT_COLUMNS,
               name: str | None = None) -> DatasetSplit:
    """Load one split file.

    Rows with unknown labels or empty text are skipped and counted in
    ``split.warnings`` (with their line numbers); a missing column is fatal.
    """
    if fmt not in ("csv", "tsv"):
        raise CorpusError(f"unsupported format: {fmt}")
    if not os.path.exists(path):
        raise CorpusError(f"dataset file not found: {path}")
    id_col, text_col, label_col = columns

    docs: list[LabeledDocument] = []
    warnings: list[str] = []
    seen_ids: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        if fmt == "csv":
            reader = csv.DictReader(fh)
        else:
            reader = csv.DictReader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = reader.fieldnames or []
        for col in columns:
            if col not in header:
                raise CorpusError(
                    f"{path}: required column {col!r} missing from header {header}")
        for row in reader:
            line_no = reader.line_num
            raw_label = row.get(label_col) or ""
            try:
                label = parse_label(raw_label)
            except ValueError:
                warnings.append(f"line {line_no}: unknown label {raw_label!r}, row skipped")
                continue
            text = (row.get(text_col) or "").strip()
            if not text:
                warnings.append(f"line {line_no}: empty text, row skipped")
                continue
            doc_id = (row.get(id_col) or "").strip()
            if doc_id in seen_ids:
                raise CorpusError(f"{path}: duplicate document id {doc_id!r} at line {line_no}")
            seen_ids.add(doc_id)
            docs.append(LabeledDocument(id=doc_id, text=text, label=label))

    split_name = name or os.path.splitext(os.path.basename(path))[0]
    return DatasetSplit(name=split_name, documents=docs, warnings=warnings)


def save_split(split: DatasetSplit, path, fmt: str = "csv",
               columns=DEFAULT_COLUMNS) -> None:
    """Serialise a split back to disk in the ingestion format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if fmt == "csv":
            writer = csv.writer(fh)
        elif fmt == "tsv":
            writer = csv.writer(fh, delimiter="\t", quoting=csv.QUOTE_NONE,
                                escapechar="\\")
        else:
            raise CorpusError(f"unsupported format: {fmt}")
        writer.writerow(list(columns))
        for doc in split.documents:
            writer.writerow([doc.id, doc.text, LABEL_TO_NAME[doc.label]])


def class_distribution(split: DatasetSplit) -> tuple[int, int]:
    """(real_count, fake_count); the two always sum to len(split)."""
    real = sum(1 for d in split.documents if d.label == LABEL_REAL)
    return real, len(split.documents) - real


# ---------------------------------------------------------------------------
# Synthetic corpus
# ---------------------------------------------------------------------------

# Word pools for the two unigram distributions.  Class pools are disjoint;
# the shared pool plus a small cross-class noise rate keeps the problem
# non-trivial.
_SHARED_WORDS = """
virus outbreak pandemic health people city country world report news case
cases test tests positive negative spread wave mask masks vaccine doses
hospital doctors nurses patients symptoms fever cough travel school work
home family community state government public official data numbers chart
week month today update lockdown quarantine distance safety risk study
research science immunity infection recovery death toll economy market

""".split()

_REAL_WORDS = """
ministry confirmed reported announced statement briefing guidelines advisory
officials surveillance bulletin laboratory samples screening registered
district administration authorities verified measures protocol capacity
vaccination campaign eligible appointment register portal helpline toll
figures cumulative discharged active tally recoveries mortality situation
update evening district wise total confirm
""".split()

_FAKE_WORDS = """
miracle cure secret exposed truth hoax conspiracy shocking banned hidden
garlic lemon ginger bleach remedy cures instantly overnight magical
microchip tracking bill gates plandemic wake sheeple media lying coverup
proof leaked insider whatsapp forward share viral warning alert deadly
poison toxic chemtrails radiation towers causes prevents guaranteed doctor
wont tell
""".split()

_STOP_FILLER = "the is and for with of to in on at a our this that was".split()

_URL_SAMPLES = ["https://t.co/{:06x}", "http://example.com/p/{:d}", "www.newslink.org/{:d}"]


def _synthetic_text(rng: np.random.Generator, label: int) -> str:
    own = _REAL_WORDS if label == LABEL_REAL else _FAKE_WORDS
    other = _FAKE_WORDS if label == LABEL_REAL else _REAL_WORDS
    n_words = int(rng.integers(9, 22))
    words = []
    for _ in range(n_words):
        u = rng.random()
        if u < 0.34:
            pool = own
        elif u < 0.38:
            pool = other  # cross-class noise
        elif u < 0.70:
            pool = _SHARED_WORDS
        else:
            pool = _STOP_FILLER
        words.append(pool[int(rng.integers(len(pool)))])
    if rng.random() < 0.3:
        words.append(str(int(rng.integers(2, 900))) + ("k" if rng.random() < 0.5 else ""))
    text = " ".join(words)
    if rng.random() < 0.5:
        text = text.capitalize() + "."
    if rng.random() < 0.25:
        text += " " + _URL_SAMPLES[int(rng.integers(3))].format(int(rng.integers(1 << 20)))
    return text


def synthetic_split(name: str, size: int, seed: int) -> DatasetSplit:
    """One synthetic split with the canonical 56:51 real:fake balance."""
    rng = np.random.default_rng(seed)
    n_real = int(round(size * 56 / 107))
    labels = np.array([LABEL_REAL] * n_real + [LABEL_FAKE] * (size - n_real))
    rng.shuffle(labels)
    docs = [
        LabeledDocument(id=f"{name}-{i}", text=_synthetic_text(rng, int(lab)), label=int(lab))
        for i, lab in enumerate(labels)
    ]
    return DatasetSplit(name=name, documents=docs)


def generate_synthetic_corpus(out_dir, train_size: int = 6420, seed: int = 0,
                              fmt: str = "csv") -> dict[str, str]:
    """Write train/validation/test files mirroring the real corpus layout.

    Validation and test are one third of the train size, matching the real
    distribution's 3:1:1 split.  Returns the file paths by split name.
    """
    os.makedirs(out_dir, exist_ok=True)
    side = max(2, int(round(train_size / 3)))
    sizes = {"train": train_size, "validation": side, "test": side}
    paths = {}
    for i, (name, size) in enumerate(sizes.items()):
        split = synthetic_split(name, size, seed + i)
        path = os.path.join(out_dir, f"{name}.{fmt}")
        save_split(split, path, fmt=fmt)
        paths[name] = path
    return paths
