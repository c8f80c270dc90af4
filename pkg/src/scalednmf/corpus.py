"""From raw documents to a pruned vocabulary and a sparse count matrix.

The preprocessing chain is: tokenize (lowercase, runs of two or more word
characters), build a corpus-wide vocabulary, drop the most common tokens at a
likelihood change point, drop rare tokens while keeping 99% of the total
count mass, then assemble the document-term count matrix.
"""

from __future__ import annotations

import csv
import json
import math
import re
from collections import Counter
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .scaling import DocTermMatrix

__all__ = [
    "RawDocument",
    "Vocabulary",
    "PruneReport",
    "tokenize",
    "build_vocabulary",
    "common_token_split",
    "remove_common_tokens",
    "remove_rare_tokens",
    "prune_vocabulary",
    "count_matrix",
    "load_corpus",
]

_TOKEN_PATTERNS: dict[int, re.Pattern[str]] = {}

# MLE variance floor; keeps the likelihood finite on constant populations
_VARIANCE_FLOOR = 1e-9


@dataclass(frozen=True)
class RawDocument:
    """One document: unique id, raw text, optional ground-truth label."""

    id: str
    text: str
    label: str | None = None


@dataclass(frozen=True)
class Vocabulary:
    """Ordered terms with total corpus counts.

    Terms are sorted by descending frequency, ties broken lexicographically,
    which fixes the column order of the count matrix.
    """

    terms: tuple[str, ...]
    index: dict[str, int]
    frequency: dict[str, int]

    @classmethod
    def from_counts(cls, counts: dict[str, int]) -> "Vocabulary":
        terms = tuple(sorted(counts, key=lambda t: (-counts[t], t)))
        return cls(
            terms=terms,
            index={t: i for i, t in enumerate(terms)},
            frequency={t: int(counts[t]) for t in terms},
        )

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def total_count(self) -> int:
        return sum(self.frequency.values())

    def counts_descending(self) -> list[int]:
        return [self.frequency[t] for t in self.terms]


@dataclass(frozen=True)
class PruneReport:
    """What pruning removed and how much count mass survived."""

    common_removed: tuple[tuple[str, int], ...] = ()
    rare_removed: tuple[tuple[str, int], ...] = ()
    common_threshold: int | None = None
    rare_mass_kept: float = 1.0

    def merged_with(self, other: "PruneReport") -> "PruneReport":
        return PruneReport(
            common_removed=self.common_removed + other.common_removed,
            rare_removed=self.rare_removed + other.rare_removed,
            common_threshold=other.common_threshold
            if other.common_threshold is not None
            else self.common_threshold,
            rare_mass_kept=min(self.rare_mass_kept, other.rare_mass_kept),
        )

    def to_json(self) -> str:
        payload = asdict(self)
        payload["common_removed"] = [list(p) for p in self.common_removed]
        payload["rare_removed"] = [list(p) for p in self.rare_removed]
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _token_pattern(min_len: int) -> re.Pattern[str]:
    if min_len < 1:
        raise ValueError("minimum token length must be >= 1")
    if min_len not in _TOKEN_PATTERNS:
        _TOKEN_PATTERNS[min_len] = re.compile(rf"\w{{{min_len},}}")
    return _TOKEN_PATTERNS[min_len]


def tokenize(text: str, min_len: int = 2) -> list[str]:
    """Lowercased maximal runs of at least ``min_len`` word characters.

    Punctuation splits tokens and runs shorter than ``min_len`` are dropped;
    order is preserved.
    """
    return _token_pattern(min_len).findall(text.lower())


def build_vocabulary(docs: list[RawDocument], min_token_len: int = 2) -> Vocabulary:
    """Aggregate token counts over the corpus into a vocabulary."""
    if not docs:
        raise DataError("empty vocabulary: no documents")
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(tokenize(doc.text, min_token_len))
    if not counts:
        raise DataError("empty vocabulary: no tokens survive tokenization")
    return Vocabulary.from_counts(dict(counts))


def _normal_loglik(pop: np.ndarray) -> float:
    """Gaussian log-likelihood of ``pop`` at its own MLE mean and variance."""
    mu = pop.mean()
    ss = float(((pop - mu) ** 2).sum())
    var = max(ss / pop.size, _VARIANCE_FLOOR)
    return -0.5 * pop.size * math.log(2.0 * math.pi * var) - ss / (2.0 * var)


def common_token_split(counts) -> int | None:
    """Change point in a descending count profile, or None when there is none.

    The counts are split at every admissible position into a high-count and a
    low-count population (each of size >= 2); both are modeled as normal with
    their own mean and variance, and the split with the highest total
    log-likelihood wins.  Returns the size of the high-count head to remove.
    """
    c = np.sort(np.asarray(counts, dtype=np.float64))[::-1]
    m = c.size
    if m < 4:
        return None
    if np.all(c == c[0]):
        # every split scores identically on a constant profile
        return None
    best_split, best_ll = None, -np.inf
    for s in range(2, m - 1):
        ll = _normal_loglik(c[:s]) + _normal_loglik(c[s:])
        if ll > best_ll:
            best_split, best_ll = s, ll
    return best_split


def remove_common_tokens(vocab: Vocabulary) -> tuple[Vocabulary, PruneReport]:
    """Drop the high-frequency head of the vocabulary at the likelihood split."""
    if len(vocab) == 0:
        raise DataError("cannot prune an empty vocabulary")
    split = common_token_split(vocab.counts_descending())
    if split is None:
        return vocab, PruneReport()
    removed = vocab.terms[:split]
    kept = {t: vocab.frequency[t] for t in vocab.terms[split:]}
    report = PruneReport(
        common_removed=tuple((t, vocab.frequency[t]) for t in removed),
        common_threshold=vocab.frequency[removed[-1]],
    )
    return Vocabulary.from_counts(kept), report


def remove_rare_tokens(vocab: Vocabulary, keep_mass: float = 0.99) -> tuple[Vocabulary, PruneReport]:
    """Keep the shortest high-frequency prefix holding ``keep_mass`` of all counts."""
    if len(vocab) == 0:
        raise DataError("cannot prune an empty vocabulary")
    if not 0.0 < keep_mass <= 1.0:
        raise ValueError("keep_mass must be in (0, 1]")
    counts = vocab.counts_descending()
    total = sum(counts)
    # exact rational comparison so e.g. 99/100 counts as exactly 99%
    target = Fraction(str(keep_mass)) * total
    cumulative = 0
    keep = len(counts)
    for i, c in enumerate(counts):
        cumulative += c
        if cumulative >= target:
            keep = i + 1
            break
    removed = vocab.terms[keep:]
    kept_counts = {t: vocab.frequency[t] for t in vocab.terms[:keep]}
    kept_mass = sum(kept_counts.values())
    report = PruneReport(
        rare_removed=tuple((t, vocab.frequency[t]) for t in removed),
        rare_mass_kept=kept_mass / total,
    )
    return Vocabulary.from_counts(kept_counts), report


def prune_vocabulary(vocab: Vocabulary, keep_mass: float = 0.99) -> tuple[Vocabulary, PruneReport]:
    """Common-token removal followed by rare-token removal."""
    vocab, common_report = remove_common_tokens(vocab)
    vocab, rare_report = remove_rare_tokens(vocab, keep_mass)
    return vocab, common_report.merged_with(rare_report)


def count_matrix(
    docs: list[RawDocument],
    vocab: Vocabulary,
    min_token_len: int = 2,
) -> tuple[DocTermMatrix, list[str], list[str]]:
    """Document-term counts over ``vocab``.

    Documents with no surviving tokens are dropped; returns the matrix, the
    ids of the kept documents (row order) and the ids that were dropped.
    """
    if len(vocab) == 0:
        raise DataError("cannot build a count matrix over an empty vocabulary")
    rows: list[int] = []
    cols: list[int] = []
    vals: list[int] = []
    kept_ids: list[str] = []
    dropped_ids: list[str] = []
    for doc in docs:
        doc_counts = Counter(
            vocab.index[t] for t in tokenize(doc.text, min_token_len) if t in vocab.index
        )
        if not doc_counts:
            dropped_ids.append(doc.id)
            continue
        row = len(kept_ids)
        kept_ids.append(doc.id)
        for j in sorted(doc_counts):
            rows.append(row)
            cols.append(j)
            vals.append(doc_counts[j])
    if not kept_ids:
        raise DataError("no documents survive pruning")
    counts = sp.csr_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)),
        shape=(len(kept_ids), len(vocab)),
    )
    # pruning can orphan vocabulary columns when it ran on a different corpus
    col_sums = np.asarray(counts.sum(axis=0)).ravel()
    if np.any(col_sums == 0):
        keep_cols = np.nonzero(col_sums > 0)[0]
        counts = counts[:, keep_cols]
    return DocTermMatrix.from_array(counts), kept_ids, dropped_ids


def _load_jsonl(path: Path) -> list[RawDocument]:
    docs = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise DataError(f"{path}:{lineno}: expected an object with 'id' and 'text'")
            label = obj.get("label")
            docs.append(RawDocument(id=str(obj["id"]), text=str(obj["text"]),
                                    label=None if label is None else str(label)))
    return docs


def _load_csv(path: Path) -> list[RawDocument]:
    docs = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty CSV") from None
        if header[:2] != ["id", "text"] or len(header) > 3 or (len(header) == 3 and header[2] != "label"):
            raise DataError(f"{path}:1: header must be id,text[,label], got {header}")
        has_label = len(header) == 3
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            docs.append(RawDocument(id=row[0], text=row[1], label=row[2] if has_label else None))
    return docs


def _load_dir(path: Path) -> list[RawDocument]:
    docs = []
    for file in sorted(path.glob("*.txt")):
        docs.append(RawDocument(id=file.stem, text=file.read_text(encoding="utf-8")))
    for sub in sorted(p for p in path.iterdir() if p.is_dir()):
        for file in sorted(sub.glob("*.txt")):
            docs.append(RawDocument(id=file.stem, text=file.read_text(encoding="utf-8"),
                                    label=sub.name))
    return docs


def load_corpus(path: str | Path, format: str) -> list[RawDocument]:
    """Load documents from ``jsonl``, ``csv``, or a ``dir`` of .txt files."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus path does not exist: {path}")
    if format == "jsonl":
        docs = _load_jsonl(path)
    elif format == "csv":
        docs = _load_csv(path)
    elif format == "dir":
        if not path.is_dir():
            raise DataError(f"not a directory: {path}")
        docs = _load_dir(path)
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise DataError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
    return docs
