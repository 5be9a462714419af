#!/usr/bin/env python3
"""Run numerical test protocols 1-4 for several learners and tabulate them.

Uses the run configuration (bundled defaults, --config file, OPPSCREEN_*
environment) for grams, depth and seed; the corpus is preprocessed on the
fly. Writes one JSON report per (learner, protocol) plus a combined table.

    python scripts/run_protocols.py [--learners rf dt svc gd] [--protocols 1 2 3 4]
                                    [--folds 10] [--config PATH] [--out DIR]
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from oppscreen.config import load_config
from oppscreen.corpus import load_dataset
from oppscreen.evaluation import ExperimentConfig, format_delta_table, format_table, run_numerical_test, sweep_csv
from oppscreen.features import SentimentLexicons
from oppscreen.learners import TrainConfig
from oppscreen.preprocess import deduplicate, filter_relevant, load_resources, preprocess_pipeline


def processed_corpus(config):
    resources = load_resources(config.resources)
    kept, gold = [], {}
    for tweet in load_dataset(config.dataset, config.dataset_format):
        if not filter_relevant(tweet, resources.filter, resources.lexicon):
            continue
        result = preprocess_pipeline(tweet, resources)
        if result.tokens:
            kept.append(result)
            gold[result.id] = tweet.emotion
    survivors = set(deduplicate(kept, resources.filter.jaccard_threshold).survivors)
    tweets = [t for t in kept if t.id in survivors]
    return tweets, [gold[t.id] for t in tweets]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--learners", nargs="+", default=["rf", "dt", "svc", "gd"], choices=["rf", "dt", "svc", "gd"])
    parser.add_argument("--protocols", nargs="+", type=int, default=[1, 2, 3, 4], choices=[1, 2, 3, 4])
    parser.add_argument("--folds", type=int)
    parser.add_argument("--config")
    parser.add_argument("--out", default="out/protocols")
    args = parser.parse_args()

    config = load_config(args.config, {"k": args.folds} if args.folds else None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tweets, labels = processed_corpus(config)
    lexicons = SentimentLexicons.load(**{k: config.lexicons.get(k) for k in ("polarity", "emotion", "emoji", "adverbs")})
    print(f"{len(tweets)} tweets, k={config.k}, seed={config.seed}, depth={config.depth:g}")

    sections = []
    for algorithm in args.learners:
        # bundled params belong to the default learner only
        params = config.train.params if algorithm == config.train.algorithm else {}
        experiment = ExperimentConfig(
            TrainConfig(algorithm, params, config.seed),
            depth=config.depth,
            percentile=config.percentile,
            grams=config.grams,
            use_dense=config.use_dense,
        )
        reports = []
        for protocol in args.protocols:
            start = time.perf_counter()
            report = run_numerical_test(protocol, tweets, labels, experiment, config.k, config.seed, lexicons)
            print(f"{algorithm} protocol {protocol}: {time.perf_counter() - start:.1f}s")
            (out / f"{algorithm}_p{protocol}.json").write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
            if report.depth is not None:
                (out / f"{algorithm}_sweep_p{protocol}.csv").write_text(sweep_csv(report))
            reports.append(report)
        text = format_table(reports)
        if len(reports) >= 2:
            text += "\n" + format_delta_table(reports[0], reports[-1])
        sections.append(text)

    summary = "\n".join(sections)
    (out / "summary.txt").write_text(summary)
    print(summary, end="")


if __name__ == "__main__":
    main()
