"""N-gram vocabularies, lexicon/temporal counters and chi-squared selection."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .preprocess.pipeline import ProcessedTweet
from .preprocess.resources import data_path, load_word_list

FORMAT_VERSION = 1

ANALYZERS = ("char", "char_word_boundary", "word")

DENSE_FEATURES = (
    "NEG_NUM",
    "POS_NUM",
    "NEG_PERC",
    "POS_PERC",
    "HASHTAG",
    "EXCLAMATION",
    "INTERROGATION",
    "ADVERBS",
    "NEG_POLARITY",
    "NEU_POLARITY",
    "POS_POLARITY",
    "SADNESS_EMOTION",
    "HAPPINESS_EMOTION",
    "NEG_EMOJI",
    "POS_EMOJI",
    "NEG_AWARENESS_EMOJI",
    "POS_STATEMENT_EMOJI",
    "OPPORTUNITY_EMOJI",
    "PAST",
    "PRESENT",
    "FUTURE",
    "CONDITIONAL",
)
N_DENSE = len(DENSE_FEATURES)
_DENSE_INDEX = {name: i for i, name in enumerate(DENSE_FEATURES)}

# n-gram grid used to tune the vectorizers; (1, 4) appears twice as published
VECTORIZER_GRID = {
    "max_df": (0.3, 0.35, 0.4, 0.5, 0.7, 0.8, 1.0),
    "min_df": (0.0, 0.001, 0.005, 0.008, 0.01),
    "ngram_range": ((1, 1), (1, 2), (1, 3), (1, 4), (1, 4), (1, 5), (1, 6), (1, 7)),
    "max_features": (10000, 20000, 30000, None),
}


class FeatureFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GramConfig:
    analyzer: str = "char"
    ngram_range: tuple[int, int] = (1, 7)
    max_df: float = 0.5
    min_df: float = 0.001
    max_features: int | None = None

    def __post_init__(self) -> None:
        if self.analyzer not in ANALYZERS:
            raise ValueError(f"unknown analyzer {self.analyzer!r}")
        lo, hi = self.ngram_range
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid ngram_range {self.ngram_range}")
        if not 0.0 <= self.min_df <= self.max_df <= 1.0:
            raise ValueError("need 0 <= min_df <= max_df <= 1")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be positive")
        object.__setattr__(self, "ngram_range", (int(lo), int(hi)))

    def to_json(self) -> dict:
        return {
            "analyzer": self.analyzer,
            "ngram_range": list(self.ngram_range),
            "max_df": self.max_df,
            "min_df": self.min_df,
            "max_features": self.max_features,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "GramConfig":
        return cls(
            analyzer=data["analyzer"],
            ngram_range=tuple(data["ngram_range"]),
            max_df=float(data["max_df"]),
            min_df=float(data["min_df"]),
            max_features=data.get("max_features"),
        )


def iter_grams(tokens: Sequence[str], analyzer: str, ngram_range: tuple[int, int]) -> Iterator[str]:
    lo, hi = ngram_range
    if analyzer == "word":
        for n in range(lo, hi + 1):
            for i in range(len(tokens) - n + 1):
                yield " ".join(tokens[i : i + n])
    elif analyzer == "char":
        text = " ".join(tokens)
        for n in range(lo, hi + 1):
            for i in range(len(text) - n + 1):
                yield text[i : i + n]
    elif analyzer == "char_word_boundary":
        for token in tokens:
            padded = f" {token} "
            for n in range(lo, hi + 1):
                for i in range(len(padded) - n + 1):
                    yield padded[i : i + n]
    else:
        raise ValueError(f"unknown analyzer {analyzer!r}")


def count_grams(tokens: Sequence[str], config: GramConfig) -> Counter:
    return Counter(iter_grams(tokens, config.analyzer, config.ngram_range))


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    df: dict[str, int]
    config: GramConfig
    n_docs: int

    def __len__(self) -> int:
        return len(self.index)

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "n_docs": self.n_docs,
            "grams": [{"gram": g, "index": i, "df": self.df[g]} for g, i in sorted(self.index.items(), key=lambda kv: kv[1])],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Vocabulary":
        index = {row["gram"]: int(row["index"]) for row in data["grams"]}
        df = {row["gram"]: int(row["df"]) for row in data["grams"]}
        return cls(index, df, GramConfig.from_json(data["config"]), int(data["n_docs"]))


def fit_vocabulary(corpus: Sequence[ProcessedTweet], config: GramConfig) -> Vocabulary:
    """Collect grams, prune by document frequency and cap by total count."""
    if not corpus:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    n_docs = len(corpus)
    df: Counter = Counter()
    totals: Counter = Counter()
    for tweet in corpus:
        counts = count_grams(tweet.tokens, config)
        df.update(counts.keys())
        totals.update(counts)
    kept = [g for g, d in df.items() if config.min_df <= d / n_docs <= config.max_df]
    if config.max_features is not None and len(kept) > config.max_features:
        kept.sort(key=lambda g: (-totals[g], g))
        kept = kept[: config.max_features]
    kept.sort()
    return Vocabulary({g: i for i, g in enumerate(kept)}, {g: df[g] for g in kept}, config, n_docs)


@dataclass(frozen=True)
class SentimentLexicons:
    polarity: dict[str, str] = field(default_factory=dict)
    emotion: dict[str, str] = field(default_factory=dict)
    emoji: dict[str, frozenset[str]] = field(default_factory=dict)
    adverbs: frozenset[str] = frozenset()

    @classmethod
    def load(
        cls,
        polarity: str | Path | None = None,
        emotion: str | Path | None = None,
        emoji: str | Path | None = None,
        adverbs: str | Path | None = None,
    ) -> "SentimentLexicons":
        """Load lexicon TSVs; missing paths fall back to the bundled files."""
        pol = _read_tsv(polarity or data_path("polarity_es.tsv"))
        emo = _read_tsv(emotion or data_path("emotion_es.tsv"))
        emj = {k: frozenset(c.strip() for c in v.split(",")) for k, v in _read_tsv(emoji or data_path("emoji_lexicon.tsv")).items()}
        for word, cat in pol.items():
            if cat not in ("negative", "neutral", "positive"):
                raise ValueError(f"bad polarity {cat!r} for {word!r}")
        for word, cat in emo.items():
            if cat not in ("sadness", "happiness"):
                raise ValueError(f"bad emotion {cat!r} for {word!r}")
        allowed = {"negative", "positive", "negative_awareness", "positive_statement", "opportunity"}
        for name, cats in emj.items():
            if not cats <= allowed:
                raise ValueError(f"bad emoji categories {sorted(cats)} for {name!r}")
        adv = load_word_list(adverbs or data_path("adverbs_es.txt"))
        return cls(pol, emo, emj, adv)


def _read_tsv(path: str | Path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected two tab-separated fields")
        out[parts[0].strip()] = parts[1].strip()
    return out


def is_adverb(token: str, adverbs: frozenset[str] = frozenset()) -> bool:
    return token in adverbs or (len(token) > 6 and token.endswith("mente"))


@dataclass(frozen=True)
class FeatureVector:
    sparse: dict[int, int]
    dense: tuple[int, ...]

    def __getitem__(self, name: str) -> int:
        return self.dense[_DENSE_INDEX[name]]


_EMOJI_COLUMNS = {
    "negative": "NEG_EMOJI",
    "positive": "POS_EMOJI",
    "negative_awareness": "NEG_AWARENESS_EMOJI",
    "positive_statement": "POS_STATEMENT_EMOJI",
    "opportunity": "OPPORTUNITY_EMOJI",
}
_POLARITY_COLUMNS = {"negative": "NEG_POLARITY", "neutral": "NEU_POLARITY", "positive": "POS_POLARITY"}
_EMOTION_COLUMNS = {"sadness": "SADNESS_EMOTION", "happiness": "HAPPINESS_EMOTION"}
_QUANTITY_COLUMNS = {"MINUS": "NEG_NUM", "PLUS": "POS_NUM", "MINUS_PCT": "NEG_PERC", "PLUS_PCT": "POS_PERC"}
_TENSE_COLUMNS = {"past": "PAST", "present": "PRESENT", "future": "FUTURE", "conditional": "CONDITIONAL"}


def dense_counters(tweet: ProcessedTweet, lexicons: SentimentLexicons) -> tuple[int, ...]:
    counts = [0] * N_DENSE

    def bump(name: str) -> None:
        counts[_DENSE_INDEX[name]] += 1

    for tag in tweet.quantity_tags:
        bump(_QUANTITY_COLUMNS[tag])
    counts[_DENSE_INDEX["HASHTAG"]] = len(tweet.hashtags)
    counts[_DENSE_INDEX["EXCLAMATION"]] = tweet.exclamation_count
    counts[_DENSE_INDEX["INTERROGATION"]] = tweet.interrogation_count
    for token in tweet.tokens:
        if is_adverb(token, lexicons.adverbs):
            bump("ADVERBS")
        if token in lexicons.polarity:
            bump(_POLARITY_COLUMNS[lexicons.polarity[token]])
        if token in lexicons.emotion:
            bump(_EMOTION_COLUMNS[lexicons.emotion[token]])
    for name in tweet.emojis:
        for cat in lexicons.emoji.get(name, ()):
            bump(_EMOJI_COLUMNS[cat])
    for tense in tweet.tenses:
        if tense in _TENSE_COLUMNS:
            bump(_TENSE_COLUMNS[tense])
    return tuple(counts)


@dataclass(frozen=True)
class FeatureSpace:
    """Concatenated index space of one or more gram vocabularies.

    Columns of the first vocabulary come first. ``column_map`` (set by
    :meth:`masked`) renumbers the retained columns after selection.
    """

    vocabularies: tuple[Vocabulary, ...]
    use_dense: bool = True
    column_map: dict[int, int] | None = None

    @property
    def offsets(self) -> tuple[int, ...]:
        out, total = [], 0
        for vocab in self.vocabularies:
            out.append(total)
            total += len(vocab)
        return tuple(out)

    @property
    def n_full(self) -> int:
        return sum(len(v) for v in self.vocabularies)

    @property
    def n_sparse(self) -> int:
        return self.n_full if self.column_map is None else len(self.column_map)

    @property
    def width(self) -> int:
        return self.n_sparse + (N_DENSE if self.use_dense else 0)

    def masked(self, mask: "SelectionMask") -> "FeatureSpace":
        if mask.n_columns != self.n_sparse:
            raise ValueError(f"mask covers {mask.n_columns} columns, space has {self.n_sparse}")
        if self.column_map is None:
            mapping = {col: new for new, col in enumerate(mask.retained)}
        else:
            inverse = {v: k for k, v in self.column_map.items()}
            mapping = {inverse[col]: new for new, col in enumerate(mask.retained)}
        return FeatureSpace(self.vocabularies, self.use_dense, mapping)

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "use_dense": self.use_dense,
            "dense_features": list(DENSE_FEATURES) if self.use_dense else [],
            "vocabularies": [v.to_json() for v in self.vocabularies],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FeatureSpace":
        _check_version(data)
        return cls(tuple(Vocabulary.from_json(v) for v in data["vocabularies"]), bool(data["use_dense"]))


def _check_version(data: Mapping) -> None:
    if data.get("format_version") != FORMAT_VERSION:
        raise FeatureFormatError(
            f"unsupported format_version {data.get('format_version')!r}, expected {FORMAT_VERSION}"
        )


def fit_feature_space(
    corpus: Sequence[ProcessedTweet], configs: Sequence[GramConfig], use_dense: bool = True
) -> FeatureSpace:
    return FeatureSpace(tuple(fit_vocabulary(corpus, c) for c in configs), use_dense)


def vectorize(
    tweet: ProcessedTweet, space: FeatureSpace, lexicons: SentimentLexicons | None = None
) -> FeatureVector:
    """Gram counts restricted to the fitted vocabularies plus dense counters."""
    sparse: dict[int, int] = {}
    for vocab, offset in zip(space.vocabularies, space.offsets):
        for gram, count in count_grams(tweet.tokens, vocab.config).items():
            col = vocab.index.get(gram)
            if col is None:
                continue
            col += offset
            if space.column_map is not None:
                col = space.column_map.get(col)
                if col is None:
                    continue
            sparse[col] = count
    lexicons = lexicons or SentimentLexicons()
    dense = dense_counters(tweet, lexicons) if space.use_dense else ()
    return FeatureVector(dict(sorted(sparse.items())), dense)


def design_matrix(vectors: Sequence[FeatureVector], n_sparse: int) -> np.ndarray:
    """Dense ``(n, n_sparse + n_dense)`` float matrix."""
    n_dense = len(vectors[0].dense) if vectors else 0
    X = np.zeros((len(vectors), n_sparse + n_dense))
    for row, vec in enumerate(vectors):
        if vec.sparse:
            cols = np.fromiter(vec.sparse.keys(), dtype=np.intp, count=len(vec.sparse))
            X[row, cols] = np.fromiter(vec.sparse.values(), dtype=float, count=len(vec.sparse))
        if n_dense:
            X[row, n_sparse:] = vec.dense
    return X


def chi2_scores(X, labels: Sequence) -> np.ndarray:
    """Chi-squared statistic of each non-negative count column against labels.

    Observed = per-class column sums; expected = column total split by
    class sample share. All-zero columns score 0.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise ValueError("X must be (n_samples, n_features) matching labels")
    if (X < 0).any():
        raise ValueError("chi2 needs non-negative features")
    classes = sorted(set(labels), key=repr)
    if len(classes) < 2:
        raise ValueError("chi2 needs at least two classes")
    onehot = np.array([[label == c for c in classes] for label in labels], dtype=float)
    observed = onehot.T @ X
    expected = np.outer(onehot.mean(axis=0), X.sum(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / np.where(expected > 0, expected, 1.0), 0.0)
    return terms.sum(axis=0)


@dataclass(frozen=True)
class SelectionMask:
    retained: tuple[int, ...]
    scores: tuple[float, ...]
    percentile: float

    @property
    def n_columns(self) -> int:
        return len(self.scores)

    def apply(self, vector: FeatureVector) -> FeatureVector:
        """Restrict the gram block; dense counters pass through untouched."""
        position = {col: new for new, col in enumerate(self.retained)}
        sparse = {position[c]: v for c, v in vector.sparse.items() if c in position}
        return FeatureVector(dict(sorted(sparse.items())), vector.dense)

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "percentile": self.percentile,
            "n_columns": self.n_columns,
            "retained": list(self.retained),
            "scores": list(self.scores),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SelectionMask":
        _check_version(data)
        return cls(tuple(data["retained"]), tuple(float(s) for s in data["scores"]), data["percentile"])


def select_percentile(scores: Sequence[float], percentile: float) -> SelectionMask:
    """Keep the top ``ceil(percentile% * n)`` columns; ties go to the lower index."""
    if not 0 < percentile <= 100:
        raise ValueError("percentile must be in (0, 100]")
    scores = [0.0 if math.isnan(s) else float(s) for s in scores]
    n = len(scores)
    k = math.ceil(Fraction(percentile) * n / 100)
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    return SelectionMask(tuple(sorted(order[:k])), tuple(scores), percentile)


def save_json(data: Mapping, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(data, ensure_ascii=False, sort_keys=True), encoding="utf-8")
    tmp.replace(path)


def load_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
