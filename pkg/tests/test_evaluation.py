import csv
import io
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oppscreen.corpus import LABELS
from oppscreen.evaluation import (
    ConfusionMatrix4,
    ExperimentConfig,
    NumericalTestReport,
    ToleranceReport,
    confusion,
    delta_table,
    exact_tolerances,
    format_delta_table,
    format_table,
    mean_report,
    run_numerical_test,
    sweep_csv,
    ticker_histogram,
    tolerances,
)
from oppscreen.evaluation import histogram_from_counts
from oppscreen.features import GramConfig
from oppscreen.learners import TrainConfig
from oppscreen.preprocess import ProcessedTweet

S, P, N, A = LABELS


def column_matrix(s, p, n, a):
    counts = np.zeros((4, 4), dtype=int)
    counts[:, P.index] = (s, p, n, a)
    return ConfusionMatrix4.from_array(counts)


def test_confusion_examples():
    assert confusion([P, P], [P, P]).counts[P.index] == (0, 2, 0, 0)
    assert confusion([P, P], [P, P]).total == 2
    assert confusion([], []) == ConfusionMatrix4()
    assert confusion([S, P, N, A], [P, P, P, P]).column(P) == (1, 1, 1, 1)
    with pytest.raises(ValueError, match="length mismatch"):
        confusion([P], [])


def test_matrix_validation_and_json():
    with pytest.raises(ValueError):
        ConfusionMatrix4(((1, 2), (3, 4)))
    with pytest.raises(ValueError):
        ConfusionMatrix4.from_array(-np.eye(4))
    cm = confusion([S, P, N, A, A], [P, P, N, A, N])
    assert ConfusionMatrix4.from_json(cm.to_json()) == cm
    assert cm.cell(A, N) == 1 and cm.row(A) == (0, 0, 1, 1)
    assert (cm + cm).total == 10


def test_tolerance_fixture():
    exact = exact_tolerances(column_matrix(1, 7, 1, 1))
    assert (exact["precision"], exact["tau1"], exact["tau2"]) == (Fraction(7, 10), Fraction(8, 10), Fraction(9, 10))
    report = tolerances(column_matrix(1, 7, 1, 1))
    assert (report.precision, report.tau1, report.tau2) == (0.7, 0.8, 0.9)
    assert report.coverage == 1.0


def test_all_true_flags():
    report = tolerances(column_matrix(0, 5, 0, 0))
    assert report.precision == report.tau1 == report.tau2 == 1.0


def test_no_flags_is_na():
    report = tolerances(confusion([P, N], [N, N]))
    assert report.precision is None and report.tau1 is None and report.tau2 is None
    assert report.coverage == 0.0
    assert report.to_json()["precision"] == "n/a"
    assert report.row()[0] == "n/a"
    assert ToleranceReport.from_json(report.to_json()).precision is None
    assert tolerances(ConfusionMatrix4()).coverage is None


@given(st.lists(st.lists(st.integers(0, 50), min_size=4, max_size=4), min_size=4, max_size=4))
def test_tolerance_ordering_and_identity(rows):
    cm = ConfusionMatrix4(tuple(map(tuple, rows)))
    exact = exact_tolerances(cm)
    flagged = sum(cm.column(P))
    if not flagged:
        assert exact["precision"] is None
        return
    assert exact["tau2"] >= exact["tau1"] >= exact["precision"]
    assert exact["tau2"] == 1 - Fraction(cm.cell(A, P), flagged)


def test_mean_report_skips_undefined():
    reports = [ToleranceReport(0.5, 0.6, 0.7, 0.2), ToleranceReport(None, None, None, 0.4)]
    mean = mean_report(reports)
    assert (mean.precision, mean.coverage) == (0.5, pytest.approx(0.3))


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=10))
def test_mean_within_fold_range(values):
    reports = [ToleranceReport(a, a, a, b) for a, b in values]
    mean = mean_report(reports)
    assert min(a for a, _ in values) - 1e-12 <= mean.precision <= max(a for a, _ in values) + 1e-12


# ticker histograms


def _tweet(i, *tickers):
    return ProcessedTweet(i, ("x",), tickers=tickers)


def test_histogram_examples():
    assert ticker_histogram([]).counts == {}
    flagged = [(_tweet(i, "IBEX"), P) for i in range(3)] + [(_tweet(9, "NFLX"), P), (_tweet(10, "TEF"), N)]
    hist = ticker_histogram(flagged)
    assert hist.counts == {"IBEX": 3, "NFLX": 1}
    # 75th percentile of [1, 3] is 2.5
    assert hist.upper_quartile == frozenset({"IBEX"})
    assert ticker_histogram([(_tweet(1, "SAN"), P)]).upper_quartile == frozenset({"SAN"})


def test_histogram_csv():
    text = histogram_from_counts({"B": 1, "A": 1, "C": 5}).to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows == [["ticker", "mentions", "upper_quartile"], ["C", "5", "1"], ["A", "1", "0"], ["B", "1", "0"]]


# numerical tests


MARK = "oportunidad"


def planted_corpus(n_per_class=10, seed=0):
    """Tweets where one token marks every P+ tweet and nothing else."""
    rnd = random.Random(seed)
    vocab = ["bolsa", "mercado", "valor", "sube", "baja", "cierre", "dato", "euro"]
    tweets, labels = [], []
    for label in LABELS:
        for _ in range(n_per_class):
            words = rnd.sample(vocab, 3) + ([MARK] if label is P else [])
            tweets.append(ProcessedTweet(len(tweets), tuple(words), tickers=(rnd.choice(["SAN", "TEF"]),)))
            labels.append(label)
    return tweets, labels


SMALL = ExperimentConfig(
    TrainConfig("dt"),
    depth=0.75,
    grams=(GramConfig("word", (1, 1), max_df=1.0, min_df=0.0),),
    sweep_depths=(0.0, 0.5, 0.9),
)


def test_two_fold_run_emits_two_folds():
    tweets, labels = planted_corpus()
    report = run_numerical_test(4, tweets, labels, SMALL, k=2, seed=3)
    assert [f.fold for f in report.folds] == [0, 1]
    assert sum(f.report.matrix.total for f in report.folds) == 40
    assert report.depth == 0.75 and report.classifier == "DT" and report.features == "all"
    assert [d for d, _ in report.sweep_means()] == [0.0, 0.5, 0.9]


def test_planted_token_gives_high_precision():
    tweets, labels = planted_corpus(25, seed=1)
    report = run_numerical_test(1, tweets, labels, SMALL, k=5, seed=0)
    assert report.mean.precision >= 0.95
    assert report.depth is None and not report.folds[0].sweep


def test_run_is_reproducible_and_serializable():
    tweets, labels = planted_corpus(12, seed=2)
    config = ExperimentConfig(TrainConfig("rf", {"n_trees": 5}), grams=SMALL.grams, sweep_depths=(0.5,))
    a = run_numerical_test(3, tweets, labels, config, k=3, seed=4)
    b = run_numerical_test(3, tweets, labels, config, k=3, seed=4)
    assert a.to_json() == b.to_json()
    back = NumericalTestReport.from_json(a.to_json())
    assert back.to_json() == a.to_json()
    assert sum(a.flagged_tickers.values()) == sum(
        len(t.tickers) for f in a.folds for t in tweets if t.id in set(f.flagged)
    )


def test_protocol_validation():
    tweets, labels = planted_corpus()
    with pytest.raises(ValueError, match="protocol"):
        run_numerical_test(5, tweets, labels, SMALL, k=2)
    with pytest.raises(ValueError, match="length"):
        run_numerical_test(1, tweets, labels[:-1], SMALL, k=2)
    with pytest.raises(ValueError, match="protocol"):
        SMALL.cascade_config(0, seed=1)


def test_protocol_architectures():
    assert SMALL.cascade_config(1, 0).architecture == "single_layer"
    assert SMALL.cascade_config(2, 0).depth == 0.0
    assert SMALL.cascade_config(3, 0).depth == 0.75
    assert SMALL.cascade_config(4, 0).architecture == "three_layer"
    assert ExperimentConfig(TrainConfig("dt"), percentile=40).features_label == "chi2 40%"


def test_tables():
    tweets, labels = planted_corpus()
    base = run_numerical_test(1, tweets, labels, SMALL, k=2, seed=0)
    other = run_numerical_test(4, tweets, labels, SMALL, k=2, seed=0)
    table = format_table([base, other])
    header = table.splitlines()[0].split()
    assert header == ["Test", "Classifier", "Features", "Precision", "τ1", "τ2", "Coverage", "Depth"]
    assert table.splitlines()[2].split()[-1] == "-" and table.splitlines()[3].split()[-1] == "75%"
    delta = delta_table(base, other)
    assert delta["precision"] == pytest.approx(other.mean.precision - base.mean.precision)
    assert format_delta_table(base, other).startswith("Improvement of test 4 over test 1 (DT)")
    lines = sweep_csv(other).splitlines()
    assert lines[0] == "depth,precision,tau1,tau2,coverage" and len(lines) == 4


@pytest.mark.slow
def test_synthetic_protocols_direction(synthetic_corpus, default_grams, lexicons):
    """Stacking with a decision depth should not lose precision on the synthetic corpus."""
    tweets, labels = synthetic_corpus
    config = ExperimentConfig(TrainConfig("rf", {"n_trees": 30}), grams=default_grams, sweep_depths=())
    one = run_numerical_test(1, tweets, labels, config, k=5, seed=0, lexicons=lexicons)
    four = run_numerical_test(4, tweets, labels, config, k=5, seed=0, lexicons=lexicons)
    assert four.mean.precision >= one.mean.precision


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**16))
def test_micro_matches_pooled_counts(seed):
    rnd = random.Random(seed)
    golds = [rnd.choice(LABELS) for _ in range(30)]
    preds = [rnd.choice(LABELS) for _ in range(30)]
    cm = confusion(golds, preds)
    assert sum(sum(r) for r in cm.counts) == 30
    assert cm.column(P) == tuple(sum(1 for g, p in zip(golds, preds) if g is lab and p is P) for lab in LABELS)
