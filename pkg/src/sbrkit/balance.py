"""SMOTE rebalancing and its DE-tuned variant.

The minority role is the positive class (label 1) regardless of counts:
majority rows above the target are deleted uniformly at random and the
minority is grown to the target with synthetic rows, each interpolated
between an original minority row and one of its k nearest same-class
neighbors under the Minkowski-r metric. Original minority rows are never
touched, and a minority already at or above the target is left alone.

m is a per-class target count in count mode. In the legacy percent mode
the count is m% of the original training size, so the default of 50
balances both classes while keeping the overall size.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import evaluate
from .data import LabeledMatrix
from .learners.spaces import INT, REAL, ParamSpace, ParamSpec
from .optimize import DeConfig, HistoryRow, run_de

log = logging.getLogger(__name__)

# neighbor search never widens past this many candidates
NEIGHBOR_CAP = 20


@dataclass(frozen=True)
class SmoteConfig:
    k: int = 5
    m: int = 50
    r: float = 2.0
    mode: str = "percent"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.k <= 20:
            raise ValueError("k must lie in [1, 20]")
        if self.mode not in ("count", "percent"):
            raise ValueError("mode must be 'count' or 'percent'")
        if self.mode == "count" and not 50 <= self.m <= 400:
            raise ValueError("count-mode m must lie in [50, 400]")
        if self.mode == "percent" and self.m < 1:
            raise ValueError("percent-mode m must be >= 1")
        if not 1.0 <= self.r <= 6.0:
            raise ValueError("r must lie in [1, 6]")


def smote_param_space() -> ParamSpace:
    return ParamSpace(
        (
            ParamSpec("k", INT, 1, 20, 5),
            ParamSpec("m", INT, 50, 400, 50),
            ParamSpec("r", REAL, 1.0, 6.0, 2.0),
        )
    )


@dataclass(frozen=True)
class SmotunedConfig:
    de: DeConfig = field(default_factory=lambda: DeConfig(np=30, f=0.8, cr=0.9, iter_cap=10))
    cv_folds: int = 5
    cv_seed: int = 0

    def __post_init__(self) -> None:
        if self.de.np != 10 * len(smote_param_space()):
            raise ValueError("population must be 10x the three tuned knobs (30)")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")


def minkowski_distance(a, b, r: float) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("rows must have equal length")
    if r < 1.0:
        raise ValueError("r must be >= 1")
    return float(np.sum(np.abs(a - b) ** r) ** (1.0 / r))


def _pairwise_minkowski(rows: np.ndarray, r: float) -> np.ndarray:
    diff = np.abs(rows[:, None, :] - rows[None, :, :])
    return np.sum(diff**r, axis=2) ** (1.0 / r)


def _neighbor_table(minority: np.ndarray, k: int, r: float) -> np.ndarray:
    """For each minority row, its nearest same-class neighbor indices.

    Order is (distance, index); the width is min(k, cap, n - 1). A short
    table (fewer neighbors than k) is logged, not an error.
    """
    n = minority.shape[0]
    width = min(k, NEIGHBOR_CAP, n - 1)
    if width < k:
        log.debug("only %d neighbors available for k=%d", width, k)
    dist = _pairwise_minkowski(minority, r)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :width]


def synthesize(x0, minority_set, k: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """One synthetic row near x0.

    ``minority_set`` may contain x0 itself; the first exact duplicate is
    treated as x0 and excluded from the neighbor candidates. With no
    neighbor left the row is duplicated verbatim.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    rows = np.asarray(minority_set, dtype=np.float64)
    mask = np.ones(rows.shape[0], dtype=bool)
    self_rows = np.flatnonzero((rows == x0).all(axis=1))
    if self_rows.size:
        mask[self_rows[0]] = False
    others = rows[mask]
    if others.shape[0] == 0:
        return x0.copy()
    dist = np.sum(np.abs(others - x0) ** r, axis=1) ** (1.0 / r)
    order = np.argsort(dist, kind="stable")
    found = order[: min(k, NEIGHBOR_CAP, others.shape[0])]
    z = others[found[rng.integers(found.size)]]
    u = rng.random()
    return x0 + u * (z - x0)


def _synthesize_block(
    minority: np.ndarray, count: int, k: int, r: float, rng: np.random.Generator
) -> np.ndarray:
    """``count`` synthetic rows, vectorized over one shared neighbor table."""
    if count <= 0:
        return np.empty((0, minority.shape[1]))
    if minority.shape[0] == 1:
        return np.repeat(minority, count, axis=0)
    table = _neighbor_table(minority, k, r)
    base = rng.integers(0, minority.shape[0], size=count)
    pick = rng.integers(0, table.shape[1], size=count)
    z = minority[table[base, pick]]
    x0 = minority[base]
    u = rng.random(count)[:, None]
    return x0 + u * (z - x0)


def smote(train: LabeledMatrix, cfg: SmoteConfig) -> LabeledMatrix:
    labels = train.labels
    n_min = int(np.sum(labels == 1))
    n_maj = int(np.sum(labels == 0))
    if n_min == 0 or n_maj == 0:
        raise ValueError("SMOTE needs both classes present")

    target = cfg.m if cfg.mode == "count" else int(round(cfg.m / 100.0 * train.n_rows))
    if target < 1:
        raise ValueError("target class size must be >= 1")

    rng = np.random.default_rng(cfg.seed)
    keep = np.ones(train.n_rows, dtype=bool)
    maj_idx = np.flatnonzero(labels == 0)
    if n_maj > target:
        drop = rng.choice(maj_idx, size=n_maj - target, replace=False)
        keep[drop] = False

    minority = train.features[labels == 1]
    synth = _synthesize_block(minority, target - n_min, cfg.k, cfg.r, rng)

    features = np.vstack([train.features[keep], synth])
    out_labels = np.concatenate(
        [labels[keep], np.ones(synth.shape[0], dtype=np.int64)]
    )
    return LabeledMatrix(features, out_labels, train.column_names)


def smote_hook(cfg: SmoteConfig) -> Callable[[LabeledMatrix, int], LabeledMatrix]:
    """Cross-validation hook applying this SMOTE config with a derived seed."""

    def hook(m: LabeledMatrix, seed: int) -> LabeledMatrix:
        return smote(m, replace(cfg, seed=seed))

    return hook


def smotuned(
    train: LabeledMatrix,
    learner: str,
    cfg: SmotunedConfig | None = None,
    fitness: Callable[[dict], float] | None = None,
) -> tuple[SmoteConfig, LabeledMatrix, list[HistoryRow]]:
    """Tune (k, m, r) by DE and rebalance with the winning config.

    The default fitness is the median g-measure of the learner over
    internal cross-validation, with SMOTE applied to each training fold
    only; the held-out folds never see synthetic rows.
    """
    cfg = cfg or SmotunedConfig()
    space = smote_param_space()

    if fitness is None:
        plan = evaluate.CvPlan(
            n_folds=cfg.cv_folds, n_repeats=1, stratified=True, seed=cfg.cv_seed
        )

        def fitness(vec: dict) -> float:
            mat = space.materialize(vec)
            candidate = SmoteConfig(
                k=int(mat["k"]), m=int(mat["m"]), r=float(mat["r"]), mode="count"
            )
            res = evaluate.cross_validate(
                learner, None, train, plan, pretrain_hook=smote_hook(candidate)
            )
            return res.median_g

    best, history = run_de(space, cfg.de, fitness)
    mat = space.materialize(best.values)
    best_cfg = SmoteConfig(
        k=int(mat["k"]), m=int(mat["m"]), r=float(mat["r"]), mode="count",
        seed=cfg.de.seed,
    )
    return best_cfg, smote(train, best_cfg), history
