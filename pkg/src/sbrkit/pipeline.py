"""End-to-end experiment driver.

One experiment = one project's train/test pair, a set of training-filter
variants, a mode (default parameters, DE-tuned parameters, SMOTE, or
DE-tuned SMOTE) and a seed. Every results row carries the seed and the
config hash that regenerate it. Dataset jobs are independent and can run
in parallel processes; all outputs are written atomically.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, balance, evaluate, filters, learners
from .data import DatasetPair, LabeledMatrix, atomic_writer, load_matrix_csv
from .evaluate import CvPlan
from .learners.spaces import param_space
from .optimize import DeConfig, default_de_config, run_de

log = logging.getLogger(__name__)

MODES = ("default", "de3", "de10", "smote", "smotuned")

RESULT_COLUMNS = (
    "project",
    "filter",
    "mode",
    "learner",
    "cv_median_g",
    "pd",
    "pf",
    "prec",
    "f_measure",
    "g_measure",
    "pd_median10",
    "pf_median10",
    "g_median10",
    "tune_minutes",
    "wall_minutes",
    "seed",
    "config_hash",
    "params",
)


def output_root() -> str:
    return os.environ.get("SBRKIT_HOME", "runs")


@dataclass(frozen=True)
class ExperimentConfig:
    project: str
    train_path: str
    test_path: str
    mode: str = "default"
    filter_name: str = "train"
    learner_kinds: tuple[str, ...] = learners.LEARNER_ORDER
    seed: int = 0
    out_dir: str | None = None
    top_n_keywords: int = filters.DEFAULT_TOP_N
    filter_threshold: float = filters.DEFAULT_THRESHOLD
    folds: int = 10
    repeats: int = 10
    tune_folds: int = 5
    early_stop: bool = True
    jobs: int = 1
    label_col: str = "label"

    def __post_init__(self) -> None:
        object.__setattr__(self, "learner_kinds", tuple(self.learner_kinds))
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.filter_name != "all" and self.filter_name not in filters.FILTER_NAMES:
            raise ValueError(f"unknown filter {self.filter_name!r}")
        unknown = set(self.learner_kinds) - set(learners.LEARNER_ORDER)
        if unknown:
            raise ValueError(f"unknown learners {sorted(unknown)}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of everything that shapes results; where and how wide the run
    executes (out_dir, jobs) does not change the numbers."""
    payload = {k: v for k, v in cfg.to_dict().items() if k not in ("out_dir", "jobs")}
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class RunRecord:
    config: dict
    config_hash: str
    version: str
    results: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def filter_one(
    pair: DatasetPair, name: str, top_n: int, threshold: float
) -> LabeledMatrix:
    """A single filtered training variant without building all eight."""
    if name == "train":
        return pair.train
    if name == "clni":
        return filters.apply_clni(pair.train)
    support = {"farsec": "none", "farsecsq": "square", "farsectwo": "double"}
    base = name.removeprefix("clni")
    keywords = filters.extract_security_keywords(pair.train, top_n)
    table = filters.keyword_scores(pair.train, keywords, support[base])
    out = filters.apply_farsec_filter(pair.train, table, threshold)
    if name.startswith("clni"):
        out = filters.apply_clni(out)
    return out


def tune_learner(
    kind: str,
    train: LabeledMatrix,
    iters: int,
    seed: int,
    tune_folds: int,
    early_stop: bool = True,
) -> tuple[dict, list]:
    """DE-tune one learner; fitness is the internal CV median g-measure."""
    space = param_space(kind)
    de_cfg = replace(default_de_config(kind, iters, seed=seed), early_stop=early_stop)
    plan = CvPlan(n_folds=tune_folds, n_repeats=1, seed=seed)

    def fitness(vec: dict) -> float:
        params = space.materialize(vec)
        return evaluate.cross_validate(kind, params, train, plan).median_g

    best, history = run_de(space, de_cfg, fitness)
    return space.materialize(best.values), history


def _median_of_test_runs(
    kind: str,
    params: dict | None,
    train: LabeledMatrix,
    pair: DatasetPair,
    seed: int,
    hook=None,
    runs: int = 10,
):
    """Component-wise median pd/pf/g over refits with derived seeds."""
    pds, pfs, gs = [], [], []
    for i in range(1, runs + 1):
        fit_train = train if hook is None else hook(train, seed + i)
        model = learners.fit(kind, params, fit_train, seed=seed + i)
        rep = evaluate.evaluate_on_test(model, pair)
        pds.append(rep.pd)
        pfs.append(rep.pf)
        gs.append(rep.g_measure)
    return float(np.median(pds)), float(np.median(pfs)), float(np.median(gs))


def _evaluate_dataset(cfg: ExperimentConfig, name: str, train: LabeledMatrix,
                      pair: DatasetPair) -> dict:
    """One (filter variant, mode) job; returns a results row."""
    started = time.perf_counter()
    plan = CvPlan(n_folds=cfg.folds, n_repeats=cfg.repeats, seed=cfg.seed)
    eval_pair = DatasetPair(
        train=train, test=pair.test, project=cfg.project, filter_name=name
    )
    tune_minutes = 0.0
    hook = None
    winner_hook = None

    if cfg.mode == "default":
        candidates = [(k, None) for k in cfg.learner_kinds]
        model, board = evaluate.select_best_learner(candidates, train, plan)
    elif cfg.mode in ("de3", "de10"):
        iters = 3 if cfg.mode == "de3" else 10
        tune_start = time.perf_counter()
        candidates = []
        for kind in cfg.learner_kinds:
            params, _ = tune_learner(
                kind, train, iters, cfg.seed, cfg.tune_folds, cfg.early_stop
            )
            candidates.append((kind, params))
        tune_minutes = (time.perf_counter() - tune_start) / 60.0
        model, board = evaluate.select_best_learner(candidates, train, plan)
    elif cfg.mode == "smote":
        hook = balance.smote_hook(balance.SmoteConfig(seed=cfg.seed))
        candidates = [(k, None) for k in cfg.learner_kinds]
        model, board = evaluate.select_best_learner(candidates, train, plan, hook)
        winner_hook = hook
    else:  # smotuned
        tune_start = time.perf_counter()
        smt_cfg = balance.SmotunedConfig(
            de=DeConfig(np=30, iter_cap=10, seed=cfg.seed, early_stop=cfg.early_stop),
            cv_folds=cfg.tune_folds,
            cv_seed=cfg.seed,
        )
        tuned_cfgs = {}
        for kind in cfg.learner_kinds:
            best_cfg, _, _ = balance.smotuned(train, kind, smt_cfg)
            tuned_cfgs[kind] = best_cfg
        tune_minutes = (time.perf_counter() - tune_start) / 60.0
        scored = []
        for kind in cfg.learner_kinds:
            res = evaluate.cross_validate(
                kind, None, train, plan, balance.smote_hook(tuned_cfgs[kind])
            )
            scored.append((kind, None, res.median_g))
        win = evaluate.pick_best(scored)
        win_kind = scored[win][0]
        winner_hook = balance.smote_hook(tuned_cfgs[win_kind])
        model = learners.fit(
            win_kind, None, winner_hook(train, cfg.seed), seed=cfg.seed
        )
        board = scored

    report = evaluate.evaluate_on_test(model, eval_pair)
    med_pd, med_pf, med_g = _median_of_test_runs(
        model.kind, model.params, train, eval_pair, cfg.seed, hook=winner_hook
    )
    cv_g = {k: g for k, _, g in board}[model.kind]
    wall_minutes = (time.perf_counter() - started) / 60.0
    return {
        "project": cfg.project,
        "filter": name,
        "mode": cfg.mode,
        "learner": learners.LEARNER_LABELS[model.kind],
        "cv_median_g": round(cv_g, 6),
        "pd": round(report.pd, 6),
        "pf": round(report.pf, 6),
        "prec": round(report.prec, 6),
        "f_measure": round(report.f_measure, 6),
        "g_measure": round(report.g_measure, 6),
        "pd_median10": round(med_pd, 6),
        "pf_median10": round(med_pf, 6),
        "g_median10": round(med_g, 6),
        "tune_minutes": round(tune_minutes, 2),
        "wall_minutes": round(wall_minutes, 2),
        "seed": cfg.seed,
        "config_hash": config_hash(cfg),
        "params": json.dumps(model.params),
    }


def _dataset_job(cfg_dict: dict, name: str) -> dict:
    cfg = ExperimentConfig(**cfg_dict)
    pair = load_pair(cfg)
    train = filter_one(pair, name, cfg.top_n_keywords, cfg.filter_threshold)
    return _evaluate_dataset(cfg, name, train, pair)


def load_pair(cfg: ExperimentConfig) -> DatasetPair:
    train = load_matrix_csv(cfg.train_path, cfg.label_col)
    test = load_matrix_csv(cfg.test_path, cfg.label_col)
    return DatasetPair(train=train, test=test, project=cfg.project)


def run_experiment(cfg: ExperimentConfig) -> RunRecord:
    load_pair(cfg)  # unreadable inputs should fail fast, before any job
    names = (
        sorted(filters.FILTER_NAMES) if cfg.filter_name == "all" else [cfg.filter_name]
    )
    record = RunRecord(
        config=cfg.to_dict(), config_hash=config_hash(cfg), version=__version__
    )
    if cfg.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = {
                pool.submit(_dataset_job, cfg.to_dict(), name): name for name in names
            }
            for fut, name in futures.items():
                try:
                    record.results.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - job isolation
                    log.error("dataset %s failed: %s", name, exc)
                    record.failures.append({"dataset": name, "error": str(exc)})
    else:
        for name in names:
            try:
                record.results.append(_dataset_job(cfg.to_dict(), name))
            except Exception as exc:  # noqa: BLE001 - job isolation
                log.error("dataset %s failed: %s", name, exc)
                record.failures.append({"dataset": name, "error": str(exc)})

    record.results.sort(key=lambda r: (r["project"], r["filter"], r["mode"]))
    if cfg.out_dir:
        write_outputs(record, cfg.out_dir)
    return record


def write_outputs(record: RunRecord, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_results_csv(record.results, os.path.join(out_dir, "results.csv"))
    with atomic_writer(os.path.join(out_dir, "run_record.json")) as fh:
        json.dump(record.to_dict(), fh, indent=2)
    with atomic_writer(os.path.join(out_dir, "config.json")) as fh:
        json.dump(record.config, fh, indent=2)
    if record.failures:
        with atomic_writer(os.path.join(out_dir, "failures.json")) as fh:
            json.dump(record.failures, fh, indent=2)


def write_results_csv(rows: list[dict], path) -> None:
    with atomic_writer(path) as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow(row)


def read_results_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def render_report(rows: list[dict]) -> str:
    """Plain-text comparison table; * marks the best pd per dataset."""
    if not rows:
        return "(no results)\n"
    best_pd: dict[tuple[str, str], float] = {}
    for r in rows:
        key = (r["project"], r["filter"])
        best_pd[key] = max(best_pd.get(key, -1.0), float(r["pd"]))
    header = f"{'project':<12} {'filter':<14} {'mode':<9} {'learner':<7} {'pd':>7} {'pf':>7} {'g':>7}"
    lines = [header, "-" * len(header)]
    for r in rows:
        star = "*" if float(r["pd"]) == best_pd[(r["project"], r["filter"])] else " "
        lines.append(
            f"{r['project']:<12} {r['filter']:<14} {r['mode']:<9} "
            f"{r['learner']:<7} {100 * float(r['pd']):>6.1f}{star} "
            f"{100 * float(r['pf']):>6.1f} {100 * float(r['g_measure']):>7.1f}"
        )
    return "\n".join(lines) + "\n"
