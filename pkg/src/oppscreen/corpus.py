"""Dataset entries, annotation aggregation and stratified fold assignment."""

from __future__ import annotations

import csv
import enum
import json
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence


class DatasetError(ValueError):
    """Raised for malformed, duplicated or mislabeled dataset rows."""


class EmotionLabel(enum.Enum):
    """Financial emotion tags.

    Declaration order is the confusion-matrix row/column order.
    """

    POSITIVE_STATEMENT = "S+"
    OPPORTUNITY = "P+"
    NEUTRAL = "N"
    NEGATIVE_AWARENESS = "A-"

    @property
    def index(self) -> int:
        return _LABEL_ORDER.index(self)

    @classmethod
    def parse(cls, value: str) -> "EmotionLabel":
        key = value.strip().lower().replace("−", "-")
        try:
            return _ALIASES[key]
        except KeyError:
            raise DatasetError(f"unknown emotion label {value!r}") from None

    def __str__(self) -> str:
        return self.value


_LABEL_ORDER = list(EmotionLabel)

_ALIASES = {
    "s+": EmotionLabel.POSITIVE_STATEMENT,
    "positive_statement": EmotionLabel.POSITIVE_STATEMENT,
    "p+": EmotionLabel.OPPORTUNITY,
    "opportunity": EmotionLabel.OPPORTUNITY,
    "n": EmotionLabel.NEUTRAL,
    "neutral": EmotionLabel.NEUTRAL,
    "a-": EmotionLabel.NEGATIVE_AWARENESS,
    "negative_awareness": EmotionLabel.NEGATIVE_AWARENESS,
}

LABELS: tuple[EmotionLabel, ...] = tuple(_LABEL_ORDER)


@dataclass(frozen=True)
class AnnotatedTweet:
    id: int
    text: str
    tickers: tuple[str, ...]
    emotion: EmotionLabel | None

    def __post_init__(self) -> None:
        if not self.text:
            raise DatasetError(f"tweet {self.id} has empty text")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "tickers": list(self.tickers),
            "emotion": self.emotion.value if self.emotion else None,
        }


@dataclass(frozen=True)
class AnnotationBallot:
    tweet_id: int
    votes: tuple[EmotionLabel, ...]


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: dict[int, int]

    def fold_ids(self, fold: int) -> list[int]:
        return sorted(i for i, f in self.assignment.items() if f == fold)

    def split(self, fold: int) -> tuple[list[int], list[int]]:
        """Return ``(train_ids, test_ids)`` for one fold."""
        train = sorted(i for i, f in self.assignment.items() if f != fold)
        return train, self.fold_ids(fold)


def _row_to_tweet(row: dict, where: str, labelled: bool = True) -> AnnotatedTweet:
    required = ("id", "text", "emotion") if labelled else ("id", "text")
    missing = [key for key in required if key not in row]
    if missing:
        raise DatasetError(f"{where}: missing field(s) {', '.join(missing)}")
    try:
        tweet_id = int(row["id"])
    except (TypeError, ValueError):
        raise DatasetError(f"{where}: id {row['id']!r} is not an integer") from None
    tickers = row.get("tickers", row.get("ticker", []))
    if tickers is None:
        tickers = []
    if isinstance(tickers, str):
        tickers = [t for t in (s.strip() for s in tickers.split(";")) if t]
    text = row["text"]
    if not isinstance(text, str) or not text:
        raise DatasetError(f"{where}: text must be a non-empty string")
    try:
        emotion = EmotionLabel.parse(str(row["emotion"])) if labelled or row.get("emotion") else None
    except DatasetError as exc:
        raise DatasetError(f"{where}: {exc}") from None
    return AnnotatedTweet(tweet_id, text, tuple(str(t) for t in tickers), emotion)


def load_dataset(path: str | Path, format: str | None = None, labelled: bool = True) -> list[AnnotatedTweet]:
    """Load a JSONL or CSV dataset.

    ``format`` defaults to the file suffix. Duplicate ids and unknown labels
    raise :class:`DatasetError` naming the offending line. With
    ``labelled=False`` the emotion column is optional and missing values
    load as ``None``.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in ("jsonl", "csv"):
        raise DatasetError(f"unsupported dataset format {fmt!r}")
    tweets: list[AnnotatedTweet] = []
    seen: dict[int, int] = {}
    with path.open(encoding="utf-8", newline="") as handle:
        if fmt == "jsonl":
            rows = _jsonl_rows(handle, path)
        else:
            rows = _csv_rows(handle, path)
        for lineno, row in rows:
            where = f"{path}:{lineno}"
            tweet = _row_to_tweet(row, where, labelled)
            if tweet.id in seen:
                raise DatasetError(
                    f"{where}: duplicate id {tweet.id} (first seen on line {seen[tweet.id]})"
                )
            seen[tweet.id] = lineno
            tweets.append(tweet)
    return tweets


def _jsonl_rows(handle, path: Path):
    for lineno, line in enumerate(handle, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
        if not isinstance(row, dict):
            raise DatasetError(f"{path}:{lineno}: expected a JSON object")
        yield lineno, row


def _csv_rows(handle, path: Path):
    reader = csv.DictReader(handle)
    for row in reader:
        # header occupies line 1
        yield reader.line_num, row


def save_dataset(tweets: Iterable[AnnotatedTweet], path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    with path.open("w", encoding="utf-8", newline="") as handle:
        if fmt == "jsonl":
            for tweet in tweets:
                handle.write(json.dumps(tweet.to_json(), ensure_ascii=False) + "\n")
        elif fmt == "csv":
            writer = csv.writer(handle)
            writer.writerow(["id", "text", "tickers", "emotion"])
            for tweet in tweets:
                writer.writerow([tweet.id, tweet.text, ";".join(tweet.tickers), tweet.emotion.value])
        else:
            raise DatasetError(f"unsupported dataset format {fmt!r}")


def load_ballots(path: str | Path) -> list[AnnotationBallot]:
    ballots = []
    with Path(path).open(encoding="utf-8") as handle:
        for lineno, row in _jsonl_rows(handle, Path(path)):
            try:
                votes = tuple(EmotionLabel.parse(v) for v in row["votes"])
                ballots.append(AnnotationBallot(int(row["tweet_id"]), votes))
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{lineno}: bad ballot ({exc})") from None
    return ballots


def aggregate_annotations(ballot: AnnotationBallot | Sequence[EmotionLabel], seed: int) -> EmotionLabel:
    """Majority vote; ties are broken uniformly at random from ``seed``."""
    votes = ballot.votes if isinstance(ballot, AnnotationBallot) else tuple(ballot)
    if not votes:
        raise ValueError("cannot aggregate an empty ballot")
    counts = Counter(votes)
    top = max(counts.values())
    # canonical order keeps the draw independent of vote order
    tied = [label for label in LABELS if counts.get(label) == top]
    if len(tied) == 1:
        return tied[0]
    return random.Random(seed).choice(tied)


def stratified_fold_indices(labels: Sequence, k: int, seed: int) -> list[int]:
    """Fold index per position, stratified by label.

    Members of each class are shuffled and dealt round-robin, continuing
    the deal position across classes so fold sizes also stay balanced.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    by_class: dict = {}
    for pos, label in enumerate(labels):
        by_class.setdefault(label, []).append(pos)
    rng = random.Random(seed)
    folds = [0] * len(labels)
    offset = 0
    for label in sorted(by_class, key=_sort_key):
        members = by_class[label]
        if len(members) < k:
            raise ValueError(
                f"class {label} has {len(members)} members, fewer than k={k} folds"
            )
        rng.shuffle(members)
        for j, pos in enumerate(members):
            folds[pos] = (offset + j) % k
        offset = (offset + len(members)) % k
    return folds


def _sort_key(label) -> tuple:
    if isinstance(label, EmotionLabel):
        return (0, label.index)
    return (1, str(label))


def stratified_folds(dataset: Sequence[AnnotatedTweet], k: int, seed: int) -> FoldAssignment:
    folds = stratified_fold_indices([t.emotion for t in dataset], k, seed)
    return FoldAssignment(k, {t.id: f for t, f in zip(dataset, folds)})


def class_counts(labels: Iterable[EmotionLabel]) -> dict[EmotionLabel, int]:
    counts = Counter(labels)
    return {label: counts.get(label, 0) for label in LABELS}
