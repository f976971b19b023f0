"""Loading and holding labeled bug-report data.

Two on-disk forms are supported: raw report CSVs (id / text / label
columns) and pre-vectorized matrix CSVs (feature columns followed by a
label column). Matrices are dense float64; labels are {0, 1} with
1 = security bug report (SBR).
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np


class SchemaError(ValueError):
    """A required column is missing or the header is unusable."""


class ParseError(ValueError):
    """A cell could not be parsed; the message names the row (and column)."""


@dataclass(frozen=True)
class BugReport:
    id: str
    text: str
    label: int


@dataclass(frozen=True)
class RawSchema:
    """Column mapping for raw report CSVs.

    ``positive_labels`` lists the raw label strings that map to 1; any
    other value maps to 0. When it is None the label column must already
    contain 0/1 values.
    """

    id_col: str = "id"
    text_cols: tuple[str, ...] = ("text",)
    label_col: str = "label"
    positive_labels: frozenset[str] | None = None


@dataclass
class LabeledMatrix:
    """Dense feature matrix with binary labels and named columns.

    Arrays are frozen after construction, so instances can be shared
    read-only across concurrent workers.
    """

    features: np.ndarray
    labels: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self) -> None:
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.column_names = tuple(str(c) for c in self.column_names)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length must equal the row count")
        if len(self.column_names) != self.features.shape[1]:
            raise ValueError("column_names length must equal the column count")
        if self.features.size and not np.all(np.isfinite(self.features)):
            raise ValueError("feature values must be finite")
        extra = set(np.unique(self.labels)) - {0, 1}
        if extra:
            raise ValueError(f"labels must be 0/1, got {sorted(extra)}")
        self.features.flags.writeable = False
        self.labels.flags.writeable = False

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_cols(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "LabeledMatrix":
        idx = np.asarray(idx)
        return LabeledMatrix(self.features[idx], self.labels[idx], self.column_names)


@dataclass(frozen=True)
class DatasetPair:
    """A train/test split; the test side is never touched by filtering or
    balancing, which only ever produce new training matrices."""

    train: LabeledMatrix
    test: LabeledMatrix
    project: str
    filter_name: str = "train"

    def __post_init__(self) -> None:
        if self.train.column_names != self.test.column_names:
            raise ValueError("train and test column_names differ")


class ClassSummary(NamedTuple):
    n_total: int
    n_sbr: int
    sbr_pct: float


def class_summary(m: LabeledMatrix) -> ClassSummary:
    """Row count, SBR count and SBR percentage (one decimal)."""
    n = m.n_rows
    s = int(m.labels.sum())
    pct = round(100.0 * s / n, 1) if n else 0.0
    return ClassSummary(n, s, pct)


def load_raw_csv(path, schema: RawSchema | None = None) -> list[BugReport]:
    """Read raw bug reports from a CSV file.

    Text columns are concatenated with a single space; empty text is kept
    (such reports later vectorize to all-zero rows rather than being
    dropped, which would shift the class ratios).
    """
    schema = schema or RawSchema()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = (schema.id_col, *schema.text_cols, schema.label_col)
        missing = [c for c in needed if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}")
        reports: list[BugReport] = []
        seen: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            raw = (row[schema.label_col] or "").strip()
            if schema.positive_labels is not None:
                label = 1 if raw in schema.positive_labels else 0
            else:
                label = _parse_binary(raw, f"row {lineno}")
            rid = (row[schema.id_col] or "").strip()
            if rid in seen:
                raise ParseError(f"row {lineno}: duplicate report id {rid!r}")
            seen.add(rid)
            text = " ".join((row[c] or "") for c in schema.text_cols).strip()
            reports.append(BugReport(id=rid, text=text, label=label))
    return reports


def load_matrix_csv(path, label_col: str = "label") -> LabeledMatrix:
    """Read a pre-vectorized matrix CSV (feature columns plus a label column)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: no rows") from None
        if label_col not in header:
            raise SchemaError(f"{path}: no {label_col!r} column")
        li = header.index(label_col)
        feat_idx = [j for j in range(len(header)) if j != li]
        names = tuple(header[j] for j in feat_idx)

        rows: list[np.ndarray] = []
        labels: list[int] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ParseError(
                    f"row {lineno}: expected {len(header)} fields, got {len(rec)}"
                )
            vals = np.empty(len(feat_idx), dtype=np.float64)
            for jj, j in enumerate(feat_idx):
                try:
                    vals[jj] = float(rec[j])
                except ValueError:
                    raise ParseError(
                        f"row {lineno}, column {header[j]!r}: "
                        f"non-numeric value {rec[j]!r}"
                    ) from None
            labels.append(_parse_binary(rec[li].strip(), f"row {lineno}"))
            rows.append(vals)

    feats = np.vstack(rows) if rows else np.empty((0, len(feat_idx)))
    return LabeledMatrix(feats, np.asarray(labels, dtype=np.int64), names)


def write_matrix_csv(m: LabeledMatrix, path, label_col: str = "label") -> None:
    """Write a matrix CSV that ``load_matrix_csv`` round-trips exactly."""
    with atomic_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow([*m.column_names, label_col])
        for row, label in zip(m.features, m.labels):
            w.writerow([*(repr(float(v)) for v in row), int(label)])


def _parse_binary(raw: str, where: str) -> int:
    try:
        v = float(raw)
    except ValueError:
        raise ParseError(f"{where}: label {raw!r} is not binary") from None
    if v not in (0.0, 1.0):
        raise ParseError(f"{where}: label {raw!r} is not binary")
    return int(v)


class atomic_writer:
    """Context manager writing to a temp file, renamed into place on success."""

    def __init__(self, path, mode: str = "w"):
        self.path = os.fspath(path)
        self.mode = mode

    def __enter__(self):
        d = os.path.dirname(self.path) or "."
        fd, self._tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
        self._fh = os.fdopen(fd, self.mode, newline="", encoding="utf-8")
        return self._fh

    def __exit__(self, exc_type, exc, tb):
        self._fh.close()
        if exc_type is None:
            os.replace(self._tmp, self.path)
        else:
            os.unlink(self._tmp)
        return False
