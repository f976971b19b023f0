"""Training-set filters that strip security-keyword signal out of NSBRs.

The keyword filters score every report with a Bayesian-spam-style
combination of per-keyword probabilities and drop non-security rows that
score at or above a threshold. Three support variants exist: plain
frequencies, squared SBR frequencies, and doubled NSBR frequencies. A
separate noise filter drops non-security rows whose nearest neighbors
are overwhelmingly security reports. No filter ever removes an SBR.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .data import LabeledMatrix, DatasetPair, atomic_writer

log = logging.getLogger(__name__)

FILTER_NAMES = (
    "train",
    "farsec",
    "farsecsq",
    "farsectwo",
    "clni",
    "clnifarsec",
    "clnifarsecsq",
    "clnifarsectwo",
)

SUPPORTS = ("none", "square", "double")

SCORE_MIN = 0.01
SCORE_MAX = 0.99
DEFAULT_THRESHOLD = 0.75
DEFAULT_TOP_N = 100


@dataclass(frozen=True)
class KeywordScoreTable:
    keywords: tuple[str, ...]
    scores: np.ndarray
    support: str
    columns: tuple[int, ...]  # positions of the keywords in the source matrix

    def __post_init__(self) -> None:
        if self.support not in SUPPORTS:
            raise ValueError(f"unknown support {self.support!r}")
        if not (len(self.keywords) == self.scores.shape[0] == len(self.columns)):
            raise ValueError("keywords, scores and columns must align")
        if self.scores.size and (
            self.scores.min() < SCORE_MIN or self.scores.max() > SCORE_MAX
        ):
            raise ValueError("scores must lie in [0.01, 0.99]")
        self.scores.flags.writeable = False


@dataclass(frozen=True)
class ClniConfig:
    n_neighbors: int = 5
    removal_threshold: float = 0.75
    max_iterations: int = 10
    convergence_epsilon: float = 0.01

    def __post_init__(self) -> None:
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        if not 0.0 < self.removal_threshold <= 1.0:
            raise ValueError("removal_threshold must lie in (0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_epsilon < 0.0:
            raise ValueError("convergence_epsilon must be >= 0")


def extract_security_keywords(train: LabeledMatrix, top_n: int = DEFAULT_TOP_N) -> list[str]:
    """Terms carrying the most summed feature mass over SBR rows.

    Only terms that actually occur in SBR rows qualify; ties break
    lexicographically.
    """
    sbr = train.features[train.labels == 1]
    if sbr.shape[0] == 0:
        raise ValueError("cannot build keyword table: no SBR rows")
    mass = sbr.sum(axis=0)
    present = np.flatnonzero(mass > 0)
    ranked = sorted(present, key=lambda j: (-mass[j], train.column_names[j]))
    return [train.column_names[j] for j in ranked[:top_n]]


def keyword_scores(
    train: LabeledMatrix, keywords: list[str], support: str = "none"
) -> KeywordScoreTable:
    """Per-keyword probability that a report containing it is an SBR.

    With b of n_b SBRs and g of n_g NSBRs containing keyword w, the score
    is (b'/n_b) / (b'/n_b + g'/n_g) where the support variant rewrites
    b' = b^2 (square) or g' = 2g (double). Scores are clamped into
    [0.01, 0.99]; an all-zero ratio counts as 0.01.
    """
    if not keywords:
        raise ValueError("keywords must be non-empty")
    positions = {name: j for j, name in enumerate(train.column_names)}
    missing = [w for w in keywords if w not in positions]
    if missing:
        raise ValueError(f"keywords not in matrix columns: {missing}")
    cols = tuple(positions[w] for w in keywords)

    sbr = train.features[train.labels == 1][:, cols] > 0
    nsbr = train.features[train.labels == 0][:, cols] > 0
    n_b, n_g = sbr.shape[0], nsbr.shape[0]
    if n_b == 0:
        raise ValueError("cannot score keywords: no SBR rows")
    b = sbr.sum(axis=0).astype(np.float64)
    g = nsbr.sum(axis=0).astype(np.float64)
    if support == "square":
        b = b**2
    elif support == "double":
        g = 2.0 * g
    rb = b / n_b
    rg = g / n_g if n_g else np.zeros_like(g)
    denom = rb + rg
    with np.errstate(invalid="ignore"):
        raw = np.where(denom > 0, rb / np.where(denom > 0, denom, 1.0), 0.0)
    scores = np.clip(raw, SCORE_MIN, SCORE_MAX)
    return KeywordScoreTable(tuple(keywords), scores, support, cols)


def _report_scores(features: np.ndarray, table: KeywordScoreTable) -> np.ndarray:
    """Graham-combined score per row; rows containing no keyword score 0.

    Products are combined in log space: P / (P + Q) with P the product of
    present-keyword scores and Q the product of their complements.
    """
    present = features[:, table.columns] > 0
    lp = present @ np.log(table.scores)
    lq = present @ np.log1p(-table.scores)
    value = 1.0 / (1.0 + np.exp(lq - lp))
    value[~present.any(axis=1)] = 0.0
    return value


def score_report(row, table: KeywordScoreTable) -> float:
    if not table.keywords:
        raise ValueError("empty keyword table")
    row = np.asarray(row, dtype=np.float64)
    return float(_report_scores(row[None, :], table)[0])


def apply_farsec_filter(
    train: LabeledMatrix, table: KeywordScoreTable, threshold: float = DEFAULT_THRESHOLD
) -> LabeledMatrix:
    """Remove NSBR rows scoring at or above the threshold; keep row order."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    scores = _report_scores(train.features, table)
    drop = (train.labels == 0) & (scores >= threshold)
    return train.subset(np.flatnonzero(~drop))


def _nearest_labels(features: np.ndarray, queries: np.ndarray, labels: np.ndarray, k: int):
    """Fraction of label-1 rows among each query row's k nearest others.

    Euclidean metric; neighbor order is (distance, index) and the query
    row itself never counts. Chunked so big matrices stay in memory.
    """
    sq = np.einsum("ij,ij->i", features, features)
    out = np.empty(queries.size)
    chunk = max(1, int(2**22 // max(features.shape[0], 1)))
    for s in range(0, queries.size, chunk):
        q = queries[s : s + chunk]
        d2 = sq[q][:, None] + sq[None, :] - 2.0 * (features[q] @ features.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(q.size), q] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out[s : s + chunk] = labels[order].mean(axis=1)
    return out


def apply_clni(train: LabeledMatrix, cfg: ClniConfig | None = None) -> LabeledMatrix:
    """Iteratively drop NSBRs surrounded by opposite-label neighbors.

    Each pass marks NSBR rows whose fraction of SBRs among their
    n_neighbors nearest rows reaches the removal threshold, removes them,
    and repeats until new removals fall below convergence_epsilon of the
    total removed or the iteration cap is hit.
    """
    cfg = cfg or ClniConfig()
    if train.n_rows <= cfg.n_neighbors:
        raise ValueError(
            f"need more than {cfg.n_neighbors} rows for CLNI, got {train.n_rows}"
        )
    keep = np.arange(train.n_rows)
    removed_total = 0
    for _ in range(cfg.max_iterations):
        if keep.size <= cfg.n_neighbors:
            break
        feats = train.features[keep]
        labels = train.labels[keep]
        queries = np.flatnonzero(labels == 0)
        if queries.size == 0:
            break
        frac_sbr = _nearest_labels(feats, queries, labels, cfg.n_neighbors)
        marked = queries[frac_sbr >= cfg.removal_threshold]
        removed_total += marked.size
        mask = np.ones(keep.size, dtype=bool)
        mask[marked] = False
        keep = keep[mask]
        change = marked.size / max(removed_total, 1)
        if change < cfg.convergence_epsilon:
            break
    return train.subset(keep)


def build_all_filtered_sets(
    pair: DatasetPair,
    top_n: int = DEFAULT_TOP_N,
    threshold: float = DEFAULT_THRESHOLD,
    clni_cfg: ClniConfig | None = None,
) -> dict[str, LabeledMatrix]:
    """All eight training variants; the test side is never touched."""
    out: dict[str, LabeledMatrix] = {"train": pair.train}
    keywords = extract_security_keywords(pair.train, top_n)
    for name, support in (
        ("farsec", "none"),
        ("farsecsq", "square"),
        ("farsectwo", "double"),
    ):
        table = keyword_scores(pair.train, keywords, support)
        out[name] = apply_farsec_filter(pair.train, table, threshold)
    out["clni"] = apply_clni(pair.train, clni_cfg)
    for name in ("farsec", "farsecsq", "farsectwo"):
        out["clni" + name] = apply_clni(out[name], clni_cfg)
    return out


def export_keyword_table_csv(table: KeywordScoreTable, path) -> None:
    with atomic_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(["term", "score", "support"])
        for term, score in zip(table.keywords, table.scores):
            w.writerow([term, repr(float(score)), table.support])
