"""Confusion-matrix metrics, cross-validation and learner selection.

The positive class is always the security bug report (label 1). All five
measures use the 0/0 -> 0 convention so they stay total over degenerate
classifiers. The tuning objective throughout is the g-measure, the
harmonic mean of pd and (1 - pf).
"""

from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import learners
from .data import DatasetPair, LabeledMatrix

log = logging.getLogger(__name__)

# A hook rebalances or filters a training partition; it receives a derived
# seed and must never see the validation rows.
PretrainHook = Callable[[LabeledMatrix, int], LabeledMatrix]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")


@dataclass(frozen=True)
class MetricsReport:
    pd: float
    pf: float
    prec: float
    f_measure: float
    g_measure: float


@dataclass(frozen=True)
class CvPlan:
    n_folds: int = 10
    n_repeats: int = 10
    stratified: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def confusion(predicted, actual) -> ConfusionMatrix:
    predicted = np.asarray(predicted, dtype=np.int64)
    actual = np.asarray(actual, dtype=np.int64)
    if predicted.shape != actual.shape:
        raise ValueError("predicted and actual lengths differ")
    return ConfusionMatrix(
        tp=int(np.sum((predicted == 1) & (actual == 1))),
        fp=int(np.sum((predicted == 1) & (actual == 0))),
        tn=int(np.sum((predicted == 0) & (actual == 0))),
        fn=int(np.sum((predicted == 0) & (actual == 1))),
    )


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """pd, pf, precision, f-measure and g-measure from raw counts."""
    pd = _ratio(cm.tp, cm.tp + cm.fn)
    pf = _ratio(cm.fp, cm.fp + cm.tn)
    prec = _ratio(cm.tp, cm.tp + cm.fp)
    f = _ratio(2.0 * pd * prec, pd + prec)
    g = _ratio(2.0 * pd * (1.0 - pf), pd + (1.0 - pf))
    return MetricsReport(pd=pd, pf=pf, prec=prec, f_measure=f, g_measure=g)


def kfold_split(m: LabeledMatrix, plan: CvPlan) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint folds covering every row once.

    Stratified splitting deals each class's shuffled rows onto folds with
    one continuing cyclic cursor, so per-fold class counts stay within one
    of proportional and fold sizes within one of each other. When the
    minority class has fewer rows than folds, splitting silently cannot
    stratify, so it falls back to plain shuffling with a logged warning.
    """
    n = m.n_rows
    if n < plan.n_folds:
        raise ValueError(f"cannot split {n} rows into {plan.n_folds} folds")
    rng = np.random.default_rng(plan.seed)
    folds: list[list[int]] = [[] for _ in range(plan.n_folds)]

    stratified = plan.stratified
    if stratified:
        minority = int(min(np.sum(m.labels == 0), np.sum(m.labels == 1)))
        if 0 < minority < plan.n_folds:
            log.warning(
                "minority class has %d rows < %d folds; falling back to "
                "non-stratified split",
                minority,
                plan.n_folds,
            )
            stratified = False

    if stratified:
        cursor = 0
        for cls in (0, 1):
            idx = np.flatnonzero(m.labels == cls)
            rng.shuffle(idx)
            for i in idx:
                folds[cursor % plan.n_folds].append(int(i))
                cursor += 1
    else:
        idx = rng.permutation(n)
        for pos, i in enumerate(idx):
            folds[pos % plan.n_folds].append(int(i))

    out = []
    for k in range(plan.n_folds):
        valid = np.asarray(sorted(folds[k]), dtype=np.int64)
        mask = np.ones(n, dtype=bool)
        mask[valid] = False
        out.append((np.flatnonzero(mask), valid))
    return out


@dataclass(frozen=True)
class CvResult:
    reports: tuple[tuple[MetricsReport, ...], ...]  # [repeat][fold]
    repeat_g: tuple[float, ...]
    median_g: float


def _hook_seed(repeat_seed: int, fold: int) -> int:
    return int(np.random.SeedSequence((repeat_seed, fold)).generate_state(1)[0])


def cross_validate(
    kind: str,
    params: dict | None,
    m: LabeledMatrix,
    plan: CvPlan,
    pretrain_hook: PretrainHook | None = None,
) -> CvResult:
    """Repeated stratified CV; the hook touches training partitions only.

    Each repeat r derives its seed as plan.seed + r, splits, fits on every
    training fold (after the hook, when given) and scores the held-out
    fold. A repeat's g is the mean over its folds; the reported median is
    taken across repeats.
    """
    all_reports: list[tuple[MetricsReport, ...]] = []
    repeat_g: list[float] = []
    for r in range(plan.n_repeats):
        repeat_seed = plan.seed + r
        splits = kfold_split(m, replace(plan, seed=repeat_seed))
        fold_reports: list[MetricsReport] = []
        for fold_i, (train_idx, valid_idx) in enumerate(splits):
            train_part = m.subset(train_idx)
            if pretrain_hook is not None:
                train_part = pretrain_hook(train_part, _hook_seed(repeat_seed, fold_i))
            model = learners.fit(kind, params, train_part, seed=repeat_seed)
            valid = m.subset(valid_idx)
            pred = learners.predict(model, valid.features)
            fold_reports.append(metrics(confusion(pred, valid.labels)))
        all_reports.append(tuple(fold_reports))
        repeat_g.append(float(np.mean([rep.g_measure for rep in fold_reports])))
    return CvResult(
        reports=tuple(all_reports),
        repeat_g=tuple(repeat_g),
        median_g=float(statistics.median(repeat_g)),
    )


def pick_best(scored: Sequence[tuple[str, dict | None, float]]) -> int:
    """Index of the winning (kind, params, median_g) triple.

    Ties go to the earliest learner in the fixed order NB, RF, LR, MLP,
    KNN, then to input position.
    """
    if not scored:
        raise ValueError("no candidates")
    order = {k: i for i, k in enumerate(learners.LEARNER_ORDER)}
    best = 0
    for i, (kind, _, g) in enumerate(scored[1:], start=1):
        bk, _, bg = scored[best]
        if g > bg or (g == bg and order[kind] < order[bk]):
            best = i
    return best


def select_best_learner(
    candidates: Sequence[tuple[str, dict | None]],
    m: LabeledMatrix,
    plan: CvPlan,
    pretrain_hook: PretrainHook | None = None,
) -> tuple[learners.FittedModel, list[tuple[str, dict | None, float]]]:
    """Cross-validate every candidate, refit the winner on the full data.

    Returns the refit model plus the leaderboard of (kind, params,
    median_g) in input order.
    """
    scored = []
    for kind, params in candidates:
        res = cross_validate(kind, params, m, plan, pretrain_hook)
        scored.append((kind, params, res.median_g))
    win = pick_best(scored)
    kind, params, _ = scored[win]
    full = m
    if pretrain_hook is not None:
        # fold ids only reach n_folds - 1, so this derived seed is fresh
        full = pretrain_hook(full, _hook_seed(plan.seed, plan.n_folds))
    model = learners.fit(kind, params, full, seed=plan.seed)
    return model, scored


def evaluate_on_test(model: learners.FittedModel, pair: DatasetPair) -> MetricsReport:
    if pair.test.n_rows == 0:
        raise ValueError("empty test partition")
    pred = learners.predict(model, pair.test.features)
    return metrics(confusion(pred, pair.test.labels))


def format_pd_pf(report: MetricsReport) -> str:
    """Render pd / pf as percentages with one decimal, e.g. "15.7 / 0.2"."""
    return f"{100.0 * report.pd:.1f} / {100.0 * report.pf:.1f}"
