"""Command-line entry point: ``oppscreen <command> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .cascade import ARCHITECTURES, CascadeConfig, CascadeFormatError, load_cascade, save_cascade, train_cascade, train_layer
from .config import ConfigError, RunConfig, load_config
from .corpus import DatasetError, EmotionLabel, load_dataset
from .evaluation import (
    ExperimentConfig,
    NumericalTestReport,
    format_delta_table,
    format_table,
    histogram_from_counts,
    run_numerical_test,
    sweep_csv,
    ticker_histogram,
)
from .features import VECTORIZER_GRID, FeatureFormatError, GramConfig, SentimentLexicons, load_json
from .learners import ModelFormatError, TrainConfig, cross_validate_cells, iter_grid
from .preprocess import ProcessedTweet, deduplicate, filter_relevant, load_resources, preprocess_pipeline

P_POS = EmotionLabel.OPPORTUNITY


class CommandError(RuntimeError):
    pass


def write_text(path: Path, text: str) -> None:
    """Write-then-rename so readers never see a partial file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def write_jsonl(path: Path, rows) -> None:
    write_text(path, "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows))


def dump_json(data) -> str:
    return json.dumps(data, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def load_processed(path: Path) -> tuple[list[ProcessedTweet], list[EmotionLabel | None]]:
    tweets, labels = [], []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise CommandError(f"{path}: processed corpus not found; run `oppscreen preprocess` first") from None
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            tweets.append(ProcessedTweet.from_json(row))
            labels.append(EmotionLabel.parse(row["emotion"]) if row.get("emotion") else None)
        except (ValueError, KeyError, TypeError) as exc:
            raise CommandError(f"{path}:{lineno}: {exc}") from None
    return tweets, labels


def _lexicons(config: RunConfig) -> SentimentLexicons:
    return SentimentLexicons.load(**{k: config.lexicons.get(k) for k in ("polarity", "emotion", "emoji", "adverbs")})


def _processed_path(config: RunConfig, given: str | None) -> Path:
    return Path(given) if given else config.out / "processed.jsonl"


def _labelled(config: RunConfig, path: Path) -> tuple[list[ProcessedTweet], list[EmotionLabel]]:
    tweets, labels = load_processed(path)
    missing = [t.id for t, lab in zip(tweets, labels) if lab is None]
    if missing:
        raise CommandError(f"{path}: tweets without a gold label: {missing[:5]}")
    return tweets, labels


def _experiment_config(config: RunConfig) -> ExperimentConfig:
    return ExperimentConfig(
        train=config.train, depth=config.depth, percentile=config.percentile, grams=config.grams, use_dense=config.use_dense
    )


def cmd_preprocess(config: RunConfig, args) -> int:
    dataset = load_dataset(config.dataset, config.dataset_format)
    resources = load_resources(config.resources)
    discards: list[dict] = []
    processed, gold = [], {}
    for tweet in dataset:
        decision = filter_relevant(tweet, resources.filter, resources.lexicon)
        if not decision:
            discards.append({"id": tweet.id, "reason": decision.reason})
            continue
        result = preprocess_pipeline(tweet, resources)
        if not result.tokens:
            discards.append({"id": tweet.id, "reason": "empty"})
            continue
        processed.append(result)
        gold[tweet.id] = tweet.emotion
    dedup = deduplicate(processed, resources.filter.jaccard_threshold)
    for kept, dropped in sorted(dedup.groups.items()):
        discards.extend({"id": i, "reason": "duplicate", "duplicate_of": kept} for i in dropped)
    survivors = set(dedup.survivors)
    rows = [{**t.to_json(), "emotion": str(gold[t.id])} for t in processed if t.id in survivors]
    out = _processed_path(config, args.output)
    write_jsonl(out, rows)
    write_jsonl(out.with_name("discards.jsonl"), sorted(discards, key=lambda d: d["id"]))
    print(f"kept {len(rows)} of {len(dataset)} tweets -> {out}; {len(discards)} discarded")
    return 0


def cmd_grid_search(config: RunConfig, args) -> int:
    """Tune learner hyperparameters per cascade layer, or the n-gram vectorizers."""
    tweets, labels = _labelled(config, _processed_path(config, args.input))
    lexicons = _lexicons(config)
    gram_keys = set(GramConfig.__dataclass_fields__)
    if args.target == "vectorizer":
        grid = {k: v for k, v in (config.grid or VECTORIZER_GRID).items() if k in gram_keys}
    else:
        grid = {k: v for k, v in config.grid.items() if k not in gram_keys}
    if not grid:
        raise CommandError(f"no {args.target} grid configured; add a [grid] table")
    cells = iter_grid(grid)

    results = {}
    for number, spec in enumerate(ARCHITECTURES["three_layer"], 1):
        sub = [(t, lab) for t, lab in zip(tweets, labels) if lab in spec.covered]
        sub_tweets = [t for t, _ in sub]
        sub_labels = [lab for _, lab in sub]
        targets = [spec.target(lab) for lab in sub_labels]
        positive = _positive_class(spec)

        def score_fold(cell, train_idx, test_idx, spec=spec, sub_tweets=sub_tweets, sub_labels=sub_labels, targets=targets, positive=positive):
            if args.target == "vectorizer":
                grams = tuple(replace(g, **cell) for g in config.grams)
                train = TrainConfig(config.train.algorithm, config.train.params, config.seed)
            else:
                grams = config.grams
                train = TrainConfig(config.train.algorithm, {**config.train.params, **cell}, config.seed)
            layer = train_layer(
                spec,
                [sub_tweets[i] for i in train_idx],
                [sub_labels[i] for i in train_idx],
                train,
                grams,
                config.percentile,
                config.use_dense,
                lexicons,
            )
            probs = layer.probabilities([sub_tweets[i] for i in test_idx], lexicons)
            predicted = [layer.model.classes[j] for j in probs.argmax(axis=1)]
            return _score(config.grid_metric, [targets[i] for i in test_idx], predicted, positive)

        result = cross_validate_cells(cells, score_fold, targets, config.grid_folds, config.seed)
        results[f"layer{number}"] = {
            "best_params": result.best_params,
            "best_score": result.best_score,
            "cells": [{"params": p, "mean": m, "folds": f} for p, m, f in result.cells],
        }
        print(f"layer {number}: best {result.best_params} ({config.grid_metric} {result.best_score:.4f})")
    write_text(config.out / f"grid_search_{args.target}.json", dump_json(results))
    return 0


def _positive_class(spec) -> str:
    # the layer class that leads towards the opportunity label
    for name, labels in spec.members.items():
        if P_POS in labels:
            return name
    raise AssertionError("every layer covers the opportunity label")


def _score(metric: str, gold: Sequence[str], predicted: Sequence[str], positive: str) -> float:
    pairs = list(zip(gold, predicted))
    if metric == "accuracy":
        return sum(g == p for g, p in pairs) / len(pairs)
    flagged = [g for g, p in pairs if p == positive]
    if metric == "precision":
        return sum(g == positive for g in flagged) / len(flagged) if flagged else 0.0
    if metric == "f1":
        tp = sum(g == positive for g in flagged)
        denom = len(flagged) + sum(g == positive for g in gold)
        return 2 * tp / denom if denom else 0.0
    raise CommandError(f"unknown grid metric {metric!r}")


def _cascade_config(config: RunConfig) -> CascadeConfig:
    layers = config.layers or (config.train,) * 3
    return CascadeConfig(
        layers=tuple(TrainConfig(t.algorithm, t.params, config.seed) for t in layers),
        depth=config.depth,
        percentile=config.percentile,
        grams=config.grams,
        use_dense=config.use_dense,
    )


def cmd_train(config: RunConfig, args) -> int:
    tweets, labels = _labelled(config, _processed_path(config, args.input))
    model = train_cascade(tweets, labels, _cascade_config(config), _lexicons(config))
    out = Path(args.model) if args.model else config.out / "model"
    save_cascade(model, out)
    print(f"trained {len(model.layers)}-layer cascade on {len(tweets)} tweets -> {out}")
    return 0


def cmd_experiment(config: RunConfig, args) -> int:
    tweets, labels = _labelled(config, _processed_path(config, args.input))
    protocols = args.protocol or list(config.protocols)
    experiment = _experiment_config(config)
    lexicons = _lexicons(config)
    reports = []
    for protocol in protocols:
        report = run_numerical_test(protocol, tweets, labels, experiment, config.k, config.seed, lexicons)
        reports.append(report)
        stem = config.out / f"experiment_p{protocol}"
        write_text(stem.with_suffix(".json"), dump_json(report.to_json()))
        write_text(stem.with_suffix(".txt"), format_table([report]))
        if report.depth is not None:
            write_text(config.out / f"depth_sweep_p{protocol}.csv", sweep_csv(report))
        hist = histogram_from_counts(report.flagged_tickers)
        write_text(config.out / f"tickers_p{protocol}.csv", hist.to_csv())
    text = format_table(reports)
    if len(reports) >= 2:
        text += "\n" + format_delta_table(reports[0], reports[-1])
    write_text(config.out / "experiment.txt", text)
    print(text, end="")
    return 0


def _classify_input(path: Path, fmt: str | None, config: RunConfig) -> list[ProcessedTweet]:
    first = next((line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()), "")
    if path.suffix == ".jsonl" and first and "tokens" in json.loads(first):
        return load_processed(path)[0]
    resources = load_resources(config.resources)
    return [preprocess_pipeline(t, resources) for t in load_dataset(path, fmt, labelled=False)]


def cmd_classify(config: RunConfig, args) -> int:
    model = load_cascade(args.model, _lexicons(config))
    tweets = _classify_input(Path(args.input), args.format, config)
    depth = args.depth if args.depth is not None else model.depth
    results = model.classify_many(tweets, depth)
    rows = [
        {"id": t.id, "tickers": list(t.tickers), **r.to_json()}
        for t, r in zip(tweets, results)
    ]
    flagged = [row for row in rows if row["label"] == str(P_POS)]
    flagged.sort(key=lambda row: (-row["confidences"][-1], row["id"]))
    others = sorted((row for row in rows if row["label"] != str(P_POS)), key=lambda row: row["id"])
    out = config.out
    write_jsonl(out / "classified.jsonl", flagged + others)
    hist = ticker_histogram((t, r.label) for t, r in zip(tweets, results))
    write_text(out / "tickers.csv", hist.to_csv())
    write_text(out / "tickers.json", dump_json(hist.to_json()))
    print(f"{len(flagged)} of {len(rows)} tweets flagged as opportunities at depth {depth:g}")
    return 0


def cmd_report(config: RunConfig, args) -> int:
    paths = sorted(config.out.glob("experiment_p*.json"))
    if args.reports:
        paths = [Path(p) for p in args.reports]
    if not paths:
        raise CommandError(f"{config.out}: no experiment reports found")
    reports = []
    for path in paths:
        try:
            reports.append(NumericalTestReport.from_json(load_json(path)))
        except (KeyError, ValueError) as exc:
            raise CommandError(f"{path}: malformed report ({exc})") from None
    reports.sort(key=lambda r: r.protocol)
    text = format_table(reports)
    if len(reports) >= 2:
        text += "\n" + format_delta_table(reports[0], reports[-1])
    write_text(config.out / "report.txt", text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--folds", type=int, help="cross-validation folds k")
    common.add_argument("--depth", type=float, help="decision depth in [0, 1]")

    parser = argparse.ArgumentParser(prog="oppscreen", description="Financial opportunity screening for tweets.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", parents=[common], help="filter, normalize and deduplicate a dataset")
    p.add_argument("--dataset", help="raw dataset (jsonl or csv)")
    p.add_argument("--output", help="processed corpus path (default OUT/processed.jsonl)")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("grid-search", parents=[common], help="cross-validated hyperparameter search per layer")
    p.add_argument("--input", help="processed corpus")
    p.add_argument("--target", choices=("learner", "vectorizer"), default="learner")
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("train", parents=[common], help="train a three-layer cascade bundle")
    p.add_argument("--input", help="processed corpus")
    p.add_argument("--model", help="bundle directory (default OUT/model)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("experiment", parents=[common], help="run numerical test protocols")
    p.add_argument("--input", help="processed corpus")
    p.add_argument("--protocol", type=int, choices=(1, 2, 3, 4), action="append", help="repeatable")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("classify", parents=[common], help="label tweets with a trained bundle")
    p.add_argument("--model", required=True, help="bundle directory")
    p.add_argument("--input", required=True, help="raw dataset or processed corpus")
    p.add_argument("--format", choices=("jsonl", "csv"))
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("report", parents=[common], help="tabulate experiment reports")
    p.add_argument("reports", nargs="*", help="report JSON files (default OUT/experiment_p*.json)")
    p.set_defaults(func=cmd_report)
    return parser


def _overrides(args) -> dict:
    out: dict = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.out is not None:
        out["out"] = str(Path(args.out).resolve())
    if args.folds is not None:
        out["k"] = args.folds
    if args.depth is not None:
        out["cascade"] = {"depth": args.depth}
    if getattr(args, "dataset", None):
        out["dataset"] = {"path": str(Path(args.dataset).resolve())}
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, _overrides(args))
        config.out.mkdir(parents=True, exist_ok=True)
        return args.func(config, args)
    except (
        CommandError,
        ConfigError,
        DatasetError,
        CascadeFormatError,
        ModelFormatError,
        FeatureFormatError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        # fold/layer context is carried in the message
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
