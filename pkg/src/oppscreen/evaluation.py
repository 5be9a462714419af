"""Cross-validated numerical tests, tolerance tables and ticker histograms."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .cascade import CascadeConfig, sweep_depth, train_cascade
from .corpus import EmotionLabel, stratified_fold_indices
from .features import GramConfig, SentimentLexicons
from .learners import TrainConfig
from .metrics import (
    ConfusionMatrix4,
    ToleranceReport,
    confusion,
    exact_tolerances,
    mean_report,
    tolerances,
)
from .preprocess.pipeline import ProcessedTweet

__all__ = [
    "ConfusionMatrix4",
    "ExperimentConfig",
    "FoldResult",
    "NumericalTestReport",
    "PROTOCOLS",
    "TickerHistogram",
    "ToleranceReport",
    "confusion",
    "delta_table",
    "exact_tolerances",
    "format_delta_table",
    "format_table",
    "mean_report",
    "run_numerical_test",
    "sweep_csv",
    "ticker_histogram",
    "tolerances",
]

P_POS = EmotionLabel.OPPORTUNITY

# protocol -> (architecture, uses decision depth)
PROTOCOLS: dict[int, tuple[str, bool]] = {
    1: ("single_layer", False),
    2: ("two_layer", False),
    3: ("two_layer", True),
    4: ("three_layer", True),
}

SWEEP_DEPTHS = (0.0, 0.25, 0.5, 0.75, 0.9)


class FoldError(RuntimeError):
    def __init__(self, fold: int, cause: Exception):
        super().__init__(f"fold {fold}: {cause}")
        self.fold = fold


@dataclass(frozen=True)
class ExperimentConfig:
    train: TrainConfig
    depth: float = 0.75
    percentile: float = 100.0
    grams: tuple[GramConfig, ...] = (
        GramConfig("char", (1, 7)),
        GramConfig("char_word_boundary", (1, 7)),
        GramConfig("word", (1, 3)),
    )
    use_dense: bool = True
    sweep_depths: tuple[float, ...] = SWEEP_DEPTHS

    def cascade_config(self, protocol: int, seed: int) -> CascadeConfig:
        if protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {sorted(PROTOCOLS)}, got {protocol}")
        architecture, with_depth = PROTOCOLS[protocol]
        train = TrainConfig(self.train.algorithm, self.train.params, seed)
        return CascadeConfig.uniform(
            train,
            architecture,
            depth=self.depth if with_depth else 0.0,
            percentile=self.percentile,
            grams=self.grams,
            use_dense=self.use_dense,
        )

    @property
    def features_label(self) -> str:
        return "all" if self.percentile >= 100 else f"chi2 {self.percentile:g}%"


@dataclass(frozen=True)
class FoldResult:
    fold: int
    report: ToleranceReport
    flagged: tuple[int, ...]
    sweep: tuple[tuple[float, ToleranceReport], ...] = ()

    def to_json(self) -> dict:
        out = {"fold": self.fold, **self.report.to_json(), "flagged": list(self.flagged)}
        if self.sweep:
            out["sweep"] = [{"depth": d, **r.to_json()} for d, r in self.sweep]
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "FoldResult":
        sweep = tuple((float(s["depth"]), ToleranceReport.from_json(s)) for s in data.get("sweep", ()))
        return cls(int(data["fold"]), ToleranceReport.from_json(data), tuple(data["flagged"]), sweep)


@dataclass(frozen=True)
class NumericalTestReport:
    protocol: int
    classifier: str
    features: str
    depth: float | None
    k: int
    seed: int
    folds: tuple[FoldResult, ...]
    flagged_tickers: dict[str, int] = field(default_factory=dict)

    @property
    def mean(self) -> ToleranceReport:
        return mean_report([f.report for f in self.folds])

    @property
    def micro(self) -> ToleranceReport:
        total = ConfusionMatrix4()
        for f in self.folds:
            total = total + f.report.matrix
        return tolerances(total)

    def sweep_means(self) -> list[tuple[float, ToleranceReport]]:
        if not self.folds or not self.folds[0].sweep:
            return []
        depths = [d for d, _ in self.folds[0].sweep]
        return [(d, mean_report([f.sweep[i][1] for f in self.folds])) for i, d in enumerate(depths)]

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "classifier": self.classifier,
            "features": self.features,
            "depth": self.depth,
            "k": self.k,
            "seed": self.seed,
            "mean": self.mean.to_json(),
            "micro": self.micro.to_json(),
            "folds": [f.to_json() for f in self.folds],
            "sweep": [{"depth": d, **r.to_json()} for d, r in self.sweep_means()],
            "flagged_tickers": dict(sorted(self.flagged_tickers.items())),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "NumericalTestReport":
        return cls(
            protocol=int(data["protocol"]),
            classifier=data["classifier"],
            features=data["features"],
            depth=data["depth"],
            k=int(data["k"]),
            seed=int(data["seed"]),
            folds=tuple(FoldResult.from_json(f) for f in data["folds"]),
            flagged_tickers=dict(data.get("flagged_tickers", {})),
        )


def fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def run_numerical_test(
    protocol: int,
    tweets: Sequence[ProcessedTweet],
    labels: Sequence[EmotionLabel],
    config: ExperimentConfig,
    k: int = 10,
    seed: int = 0,
    lexicons: SentimentLexicons | None = None,
) -> NumericalTestReport:
    """k-fold cross-validation of one protocol's architecture.

    Abstained tweets count as predicted Neutral. Folds are stratified by
    gold label and each fold trains with its own derived seed.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"protocol must be one of {sorted(PROTOCOLS)}, got {protocol}")
    if len(tweets) != len(labels):
        raise ValueError("tweets and labels differ in length")
    lexicons = lexicons or SentimentLexicons.load()
    with_depth = PROTOCOLS[protocol][1]
    fold_of = np.asarray(stratified_fold_indices(list(labels), k, seed))
    results = []
    tickers: Counter = Counter()
    for fold in range(k):
        train_idx = np.flatnonzero(fold_of != fold)
        test_idx = np.flatnonzero(fold_of == fold)
        test_tweets = [tweets[i] for i in test_idx]
        test_labels = [labels[i] for i in test_idx]
        try:
            cascade_config = config.cascade_config(protocol, fold_seed(seed, fold))
            model = train_cascade([tweets[i] for i in train_idx], [labels[i] for i in train_idx], cascade_config, lexicons)
            depths = (cascade_config.depth, *config.sweep_depths) if with_depth else (cascade_config.depth,)
            points = sweep_depth(model, test_tweets, test_labels, depths)
        except Exception as exc:
            raise FoldError(fold, exc) from exc
        main, *rest = points
        flagged_ids = set(main.flagged)
        hist = ticker_histogram([(t, P_POS) for t in test_tweets if t.id in flagged_ids])
        tickers.update(hist.counts)
        results.append(FoldResult(fold, main.report, main.flagged, tuple((p.depth, p.report) for p in rest)))
    return NumericalTestReport(
        protocol=protocol,
        classifier=config.train.algorithm.upper(),
        features=config.features_label,
        depth=config.depth if with_depth else None,
        k=k,
        seed=seed,
        folds=tuple(results),
        flagged_tickers=dict(tickers),
    )


def delta_table(base: NumericalTestReport, other: NumericalTestReport) -> dict[str, float | None]:
    """Mean metric improvement of ``other`` over ``base`` (other - base)."""
    a, b = base.mean, other.mean
    out = {}
    for name in ("precision", "tau1", "tau2", "coverage"):
        x, y = getattr(a, name), getattr(b, name)
        out[name] = None if x is None or y is None else y - x
    return out


@dataclass(frozen=True)
class TickerHistogram:
    counts: dict[str, int]
    upper_quartile: frozenset[str]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["ticker", "mentions", "upper_quartile"])
        for ticker, count in sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0])):
            writer.writerow([ticker, count, int(ticker in self.upper_quartile)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"counts": dict(sorted(self.counts.items())), "upper_quartile": sorted(self.upper_quartile)}


def ticker_histogram(flagged: Iterable[tuple[ProcessedTweet, EmotionLabel]]) -> TickerHistogram:
    """Ticker mentions among tweets labelled as opportunities."""
    counts: Counter = Counter()
    for tweet, label in flagged:
        if label is P_POS:
            counts.update(tweet.tickers)
    return histogram_from_counts(counts)


def histogram_from_counts(counts: Mapping[str, int]) -> TickerHistogram:
    if not counts:
        return TickerHistogram({}, frozenset())
    cut = np.percentile(np.fromiter(counts.values(), dtype=float), 75)
    return TickerHistogram(dict(counts), frozenset(t for t, c in counts.items() if c >= cut))


def _depth_cell(depth: float | None) -> str:
    return "-" if depth is None else f"{100 * depth:g}%"


def format_table(reports: Sequence[NumericalTestReport]) -> str:
    """Aligned text table: one row per report, mean over folds, in percent."""
    header = ("Test", "Classifier", "Features", "Precision", "τ1", "τ2", "Coverage", "Depth")
    rows = [header]
    for r in reports:
        rows.append((str(r.protocol), r.classifier, r.features, *r.mean.row(), _depth_cell(r.depth)))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def format_delta_table(base: NumericalTestReport, other: NumericalTestReport) -> str:
    delta = delta_table(base, other)
    head = f"Improvement of test {other.protocol} over test {base.protocol} ({other.classifier})"
    cells = [f"{name}: {'n/a' if v is None else f'{100 * v:+.2f}'}" for name, v in delta.items()]
    return head + "\n" + "  ".join(cells) + "\n"


def sweep_csv(report: NumericalTestReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["depth", "precision", "tau1", "tau2", "coverage"])
    for depth, r in report.sweep_means():
        writer.writerow([depth, *(("n/a" if v is None else repr(v)) for v in (r.precision, r.tau1, r.tau2, r.coverage))])
    return buf.getvalue()
