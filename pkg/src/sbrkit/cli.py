"""Command-line front end: prep, filter, tune, balance, run, report."""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys

from . import __version__, balance, filters, pipeline, textprep
from .data import (
    RawSchema,
    atomic_writer,
    load_matrix_csv,
    load_raw_csv,
    write_matrix_csv,
)
from .optimize import write_history_csv

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="sbrkit",
        description="Security bug report prediction: filtering, DE tuning, "
        "SMOTE rebalancing and pd/pf/g evaluation.",
    )
    top.add_argument("--version", action="version", version=f"sbrkit {__version__}")
    top.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = top.add_subparsers(dest="command", required=True)

    prep = sub.add_parser("prep", help="vectorize raw reports or copy matrices")
    prep.add_argument("--train", required=True)
    prep.add_argument("--test", required=True)
    prep.add_argument("--project", required=True)
    prep.add_argument("--out", default=None, help="output directory")
    prep.add_argument("--raw", action="store_true", help="inputs are raw report CSVs")
    prep.add_argument("--id-col", default="id")
    prep.add_argument("--text-col", action="append", default=None)
    prep.add_argument("--label-col", default="label")
    prep.add_argument("--positive-label", action="append", default=None,
                      help="raw label value mapped to 1 (repeatable)")
    prep.add_argument("--min-doc-freq", type=int, default=1)
    prep.add_argument("--max-terms", type=int, default=None)
    prep.add_argument("--keep-identifiers", action="store_true")
    prep.add_argument("--stopwords", default=None, help="stopword file override")
    prep.add_argument("--seed", type=int, default=0)

    filt = sub.add_parser("filter", help="write filtered training variants")
    filt.add_argument("--train", required=True)
    filt.add_argument("--test", required=True)
    filt.add_argument("--project", required=True)
    filt.add_argument("--filter", default="all",
                      choices=(*filters.FILTER_NAMES, "all"))
    filt.add_argument("--top-n-keywords", type=int, default=filters.DEFAULT_TOP_N)
    filt.add_argument("--threshold", type=float, default=filters.DEFAULT_THRESHOLD)
    filt.add_argument("--label-col", default="label")
    filt.add_argument("--out", default=None)

    tune = sub.add_parser("tune", help="DE-tune one learner on a training matrix")
    tune.add_argument("--train", required=True)
    tune.add_argument("--learner", required=True, choices=pipeline.learners.LEARNER_ORDER)
    tune.add_argument("--iters", type=int, default=10, help="generation cap")
    tune.add_argument("--tune-folds", type=int, default=5)
    tune.add_argument("--seed", type=int, default=0)
    tune.add_argument("--no-early-stop", action="store_true",
                      help="run every generation instead of stopping on stalls")
    tune.add_argument("--label-col", default="label")
    tune.add_argument("--out", default=None)

    bal = sub.add_parser("balance", help="rebalance a training matrix")
    bal.add_argument("--train", required=True)
    bal.add_argument("--mode", default="smote", choices=("smote", "smotuned"))
    bal.add_argument("--learner", default="nb", choices=pipeline.learners.LEARNER_ORDER,
                     help="fitness learner for smotuned")
    bal.add_argument("--k", type=int, default=5)
    bal.add_argument("--m", type=int, default=50)
    bal.add_argument("--r", type=float, default=2.0)
    bal.add_argument("--count", action="store_true",
                     help="treat m as a per-class count instead of a percent")
    bal.add_argument("--tune-folds", type=int, default=5)
    bal.add_argument("--seed", type=int, default=0)
    bal.add_argument("--label-col", default="label")
    bal.add_argument("--out", default=None)

    run = sub.add_parser("run", help="full experiment: filter, tune, evaluate")
    run.add_argument("--config", default=None, help="experiment config JSON")
    run.add_argument("--train")
    run.add_argument("--test")
    run.add_argument("--project")
    run.add_argument("--mode", default="default", choices=pipeline.MODES)
    run.add_argument("--filter", default="train",
                     choices=(*filters.FILTER_NAMES, "all"))
    run.add_argument("--learner", action="append", default=None,
                     help="learner kind (repeatable); all five by default")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--folds", type=int, default=10)
    run.add_argument("--repeats", type=int, default=10)
    run.add_argument("--tune-folds", type=int, default=5)
    run.add_argument("--top-n-keywords", type=int, default=filters.DEFAULT_TOP_N)
    run.add_argument("--no-early-stop", action="store_true")
    run.add_argument("--label-col", default="label")
    run.add_argument("--out", default=None)

    rep = sub.add_parser("report", help="render results CSVs as a table")
    rep.add_argument("results", nargs="+", help="results.csv paths")
    rep.add_argument("--out", default=None, help="write the table here as well")

    return top


def _out_dir(arg: str | None, default_name: str) -> str:
    out = arg or os.path.join(pipeline.output_root(), default_name)
    os.makedirs(out, exist_ok=True)
    return out


def cmd_prep(args) -> int:
    out = _out_dir(args.out, args.project)
    train_path = os.path.join(out, f"{args.project}-train.csv")
    test_path = os.path.join(out, f"{args.project}-test.csv")
    if not args.raw:
        load_matrix_csv(args.train, args.label_col)  # validate before copying
        load_matrix_csv(args.test, args.label_col)
        shutil.copyfile(args.train, train_path)
        shutil.copyfile(args.test, test_path)
        print(f"copied matrices to {out}")
        return 0

    stop = (
        frozenset(w.strip() for w in open(args.stopwords, encoding="utf-8") if w.strip())
        if args.stopwords
        else textprep.default_stopwords()
    )
    cfg = textprep.TfIdfConfig(
        stopword_list=stop, min_doc_freq=args.min_doc_freq, max_terms=args.max_terms
    )
    schema = RawSchema(
        id_col=args.id_col,
        text_cols=tuple(args.text_col or ("text",)),
        label_col=args.label_col,
        positive_labels=(
            frozenset(args.positive_label) if args.positive_label else None
        ),
    )
    train_reports = load_raw_csv(args.train, schema)
    test_reports = load_raw_csv(args.test, schema)
    train_m, vocab = textprep.matrix_from_reports(
        train_reports, cfg=cfg, keep_identifiers=args.keep_identifiers
    )
    test_m, _ = textprep.matrix_from_reports(
        test_reports, vocab=vocab, keep_identifiers=args.keep_identifiers
    )
    write_matrix_csv(train_m, train_path)
    write_matrix_csv(test_m, test_path)
    textprep.export_vocabulary_csv(vocab, os.path.join(out, f"{args.project}-vocabulary.csv"))
    print(f"wrote {train_m.n_rows}x{train_m.n_cols} train and "
          f"{test_m.n_rows}x{test_m.n_cols} test matrices to {out}")
    return 0


def cmd_filter(args) -> int:
    out = _out_dir(args.out, args.project)
    train = load_matrix_csv(args.train, args.label_col)
    test = load_matrix_csv(args.test, args.label_col)
    pair = pipeline.DatasetPair(train=train, test=test, project=args.project)
    if args.filter == "all":
        variants = filters.build_all_filtered_sets(
            pair, args.top_n_keywords, args.threshold
        )
    else:
        variants = {
            args.filter: pipeline.filter_one(
                pair, args.filter, args.top_n_keywords, args.threshold
            )
        }
    for name in sorted(variants):
        path = os.path.join(out, f"{args.project}-{name}.csv")
        write_matrix_csv(variants[name], path)
        print(f"{name}: {variants[name].n_rows} rows -> {path}")
    return 0


def cmd_tune(args) -> int:
    out = _out_dir(args.out, f"tune-{args.learner}")
    train = load_matrix_csv(args.train, args.label_col)
    params, history = pipeline.tune_learner(
        args.learner, train, args.iters, args.seed, args.tune_folds,
        early_stop=not args.no_early_stop,
    )
    with atomic_writer(os.path.join(out, "best_params.json")) as fh:
        json.dump(
            {"learner": args.learner, "params": params, "seed": args.seed,
             "best_cv_g": history[-1][1]},
            fh, indent=2,
        )
    write_history_csv(history, os.path.join(out, "history.csv"))
    print(f"best CV g={history[-1][1]:.4f} after {history[-1][2]} evaluations; "
          f"params in {out}")
    return 0


def cmd_balance(args) -> int:
    out = _out_dir(args.out, f"balance-{args.mode}")
    train = load_matrix_csv(args.train, args.label_col)
    if args.mode == "smote":
        cfg = balance.SmoteConfig(
            k=args.k, m=args.m, r=args.r,
            mode="count" if args.count else "percent", seed=args.seed,
        )
        rebalanced = balance.smote(train, cfg)
        chosen = cfg
        fitness = None
    else:
        smt = balance.SmotunedConfig(
            de=balance.DeConfig(np=30, iter_cap=10, seed=args.seed),
            cv_folds=args.tune_folds, cv_seed=args.seed,
        )
        chosen, rebalanced, history = balance.smotuned(train, args.learner, smt)
        fitness = history[-1][1]
    write_matrix_csv(rebalanced, os.path.join(out, "rebalanced.csv"))
    with atomic_writer(os.path.join(out, "smote_config.json")) as fh:
        json.dump(
            {"k": chosen.k, "m": chosen.m, "r": chosen.r, "mode": chosen.mode,
             "seed": args.seed, "fitness": fitness},
            fh, indent=2,
        )
    print(f"rebalanced {train.n_rows} -> {rebalanced.n_rows} rows in {out}")
    return 0


def cmd_run(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
        raw["learner_kinds"] = tuple(raw.get("learner_kinds", pipeline.learners.LEARNER_ORDER))
        cfg = pipeline.ExperimentConfig(**raw)
    else:
        missing = [k for k in ("train", "test", "project") if not getattr(args, k)]
        if missing:
            print(f"error: --config or --{'/--'.join(missing)} required", file=sys.stderr)
            return 2
        cfg = pipeline.ExperimentConfig(
            project=args.project,
            train_path=args.train,
            test_path=args.test,
            mode=args.mode,
            filter_name=args.filter,
            learner_kinds=tuple(args.learner or pipeline.learners.LEARNER_ORDER),
            seed=args.seed,
            out_dir=_out_dir(args.out, f"{args.project}-{args.mode}"),
            top_n_keywords=args.top_n_keywords,
            folds=args.folds,
            repeats=args.repeats,
            tune_folds=args.tune_folds,
            early_stop=not args.no_early_stop,
            jobs=args.jobs,
            label_col=args.label_col,
        )
    record = pipeline.run_experiment(cfg)
    print(pipeline.render_report(record.results), end="")
    if record.failures:
        print(json.dumps({"failures": record.failures}), file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    rows: list[dict] = []
    for path in args.results:
        rows.extend(pipeline.read_results_csv(path))
    rows.sort(key=lambda r: (r["project"], r["filter"], r["mode"]))
    table = pipeline.render_report(rows)
    print(table, end="")
    if args.out:
        with atomic_writer(args.out) as fh:
            fh.write(table)
    return 0


COMMANDS = {
    "prep": cmd_prep,
    "filter": cmd_filter,
    "tune": cmd_tune,
    "balance": cmd_balance,
    "run": cmd_run,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
