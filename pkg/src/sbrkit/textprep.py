"""Turn raw bug-report text into a term-document tf-idf matrix.

tf is the raw in-document count and idf = ln(N / df) with no smoothing,
so a term present in every document contributes a zero column. The
stopword list ships as a plain-text file and can be replaced wholesale.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .data import BugReport, LabeledMatrix, atomic_writer

_ALPHA = re.compile(r"[a-z]+")
_ALNUM = re.compile(r"[a-z0-9]+")


def default_stopwords() -> frozenset[str]:
    text = resources.files("sbrkit").joinpath("resources/stopwords_en.txt").read_text()
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def tokenize(text: str, keep_identifiers: bool = False) -> list[str]:
    """Lowercase tokens; punctuation and digits split tokens apart.

    Single-character tokens and pure digit runs are discarded. With
    ``keep_identifiers`` mixed alphanumerics like "v8" survive instead of
    being split into droppable fragments.
    """
    pattern = _ALNUM if keep_identifiers else _ALPHA
    out = []
    for tok in pattern.findall(text.lower()):
        if len(tok) < 2:
            continue
        if keep_identifiers and tok.isdigit():
            continue
        out.append(tok)
    return out


@dataclass(frozen=True)
class TfIdfConfig:
    stopword_list: frozenset[str] = field(default_factory=default_stopwords)
    min_doc_freq: int = 1
    max_terms: int | None = None

    def __post_init__(self) -> None:
        if self.min_doc_freq < 1:
            raise ValueError("min_doc_freq must be >= 1")


@dataclass(frozen=True)
class Vocabulary:
    """Retained terms in lexicographic order with their document frequencies."""

    terms: tuple[str, ...]
    doc_freq: tuple[int, ...]
    n_docs: int

    def __post_init__(self) -> None:
        if len(self.terms) != len(set(self.terms)):
            raise ValueError("vocabulary terms must be unique")
        if any(df < 1 for df in self.doc_freq):
            raise ValueError("doc_freq entries must be >= 1")


def build_vocabulary(docs: Sequence[Sequence[str]], cfg: TfIdfConfig | None = None) -> Vocabulary:
    cfg = cfg or TfIdfConfig()
    counts: Counter[str] = Counter()
    for toks in docs:
        counts.update(set(toks) - cfg.stopword_list)
    kept = [(t, c) for t, c in counts.items() if c >= cfg.min_doc_freq]
    if cfg.max_terms is not None and len(kept) > cfg.max_terms:
        kept.sort(key=lambda tc: (-tc[1], tc[0]))
        kept = kept[: cfg.max_terms]
    kept.sort(key=lambda tc: tc[0])
    return Vocabulary(
        terms=tuple(t for t, _ in kept),
        doc_freq=tuple(c for _, c in kept),
        n_docs=len(docs),
    )


def tfidf_matrix(docs: Sequence[Sequence[str]], vocab: Vocabulary) -> np.ndarray:
    """Feature matrix for ``docs`` under ``vocab``; unknown terms are ignored.

    idf uses the corpus the vocabulary was built from, so train and test
    matrices produced with the same vocabulary share one column scale.
    """
    index = {t: j for j, t in enumerate(vocab.terms)}
    if vocab.terms:
        idf = np.log(vocab.n_docs / np.asarray(vocab.doc_freq, dtype=np.float64))
    else:
        idf = np.empty(0)
    X = np.zeros((len(docs), len(vocab.terms)), dtype=np.float64)
    for i, toks in enumerate(docs):
        for tok, tf in Counter(toks).items():
            j = index.get(tok)
            if j is not None:
                X[i, j] = tf * idf[j]
    return X


def matrix_from_reports(
    reports: Sequence[BugReport],
    vocab: Vocabulary | None = None,
    cfg: TfIdfConfig | None = None,
    keep_identifiers: bool = False,
) -> tuple[LabeledMatrix, Vocabulary]:
    """Vectorize reports, building the vocabulary from them when not given."""
    docs = [tokenize(r.text, keep_identifiers) for r in reports]
    if vocab is None:
        vocab = build_vocabulary(docs, cfg)
    feats = tfidf_matrix(docs, vocab)
    labels = np.asarray([r.label for r in reports], dtype=np.int64)
    return LabeledMatrix(feats, labels, vocab.terms), vocab


def export_vocabulary_csv(vocab: Vocabulary, path) -> None:
    with atomic_writer(path) as fh:
        fh.write("term,doc_freq\n")
        for term, df in zip(vocab.terms, vocab.doc_freq):
            fh.write(f"{term},{df}\n")
