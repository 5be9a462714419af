from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from oppscreen.cascade import CascadeConfig, train_cascade
from oppscreen.config import load_config
from oppscreen.corpus import load_dataset, stratified_fold_indices
from oppscreen.features import SentimentLexicons
from oppscreen.learners import TrainConfig
from oppscreen.preprocess import data_path, deduplicate, filter_relevant, load_resources, preprocess_pipeline

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> PASS/FAIL line, filled in by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs taking more than a few seconds")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])


@pytest.fixture(scope="session")
def resources():
    return load_resources()


@pytest.fixture(scope="session")
def lexicons():
    return SentimentLexicons.load()


@pytest.fixture(scope="session")
def reference_rows():
    lines = (FIXTURES / "reference_examples.jsonl").read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


@pytest.fixture(scope="session")
def synthetic_dataset():
    return load_dataset(data_path("synthetic_corpus.jsonl"))


def process_corpus(dataset, resources):
    """Filter, preprocess and deduplicate like the ``preprocess`` command."""
    kept, gold = [], {}
    for tweet in dataset:
        if not filter_relevant(tweet, resources.filter, resources.lexicon):
            continue
        result = preprocess_pipeline(tweet, resources)
        if result.tokens:
            kept.append(result)
            gold[result.id] = tweet.emotion
    survivors = set(deduplicate(kept, resources.filter.jaccard_threshold).survivors)
    tweets = [t for t in kept if t.id in survivors]
    return tweets, [gold[t.id] for t in tweets]


@pytest.fixture(scope="session")
def synthetic_corpus(synthetic_dataset, resources):
    return process_corpus(synthetic_dataset, resources)


@pytest.fixture(scope="session")
def default_grams():
    return load_config().grams


@pytest.fixture(scope="session")
def split_corpus(synthetic_corpus):
    """80/20 stratified split of the processed synthetic corpus."""
    tweets, labels = synthetic_corpus
    fold = np.asarray(stratified_fold_indices(labels, 5, seed=0))
    train = [i for i in range(len(tweets)) if fold[i] != 0]
    test = [i for i in range(len(tweets)) if fold[i] == 0]
    pick = lambda idx, seq: [seq[i] for i in idx]  # noqa: E731
    return (pick(train, tweets), pick(train, labels)), (pick(test, tweets), pick(test, labels))


@pytest.fixture(scope="session")
def rf_cascade(split_corpus, default_grams, lexicons):
    (tweets, labels), _ = split_corpus
    config = CascadeConfig.uniform(
        TrainConfig("rf", {"n_trees": 50}, seed=0), depth=0.75, grams=default_grams
    )
    return train_cascade(tweets, labels, config, lexicons)
