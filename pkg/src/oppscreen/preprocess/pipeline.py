"""Raw tweet -> ProcessedTweet, plus relevance filtering and deduplication."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..corpus import AnnotatedTweet
from .resources import FilterConfig, FrequencyLexicon, Resources
from .text import (
    EMOJI_TOKEN_RE,
    LAUGH_TAG,
    QUANTITY_RE,
    WORD_RE,
    correct_spelling,
    extract_markers,
    is_laughter,
    lemmatize,
    normalize_quantities_and_laughter,
    remove_stopwords,
    replace_emojis,
    replace_markers,
    split_compound,
    tokenize,
    words,
)


@dataclass(frozen=True)
class ProcessedTweet:
    id: int
    tokens: tuple[str, ...]
    tickers: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    hashtags: tuple[str, ...] = ()
    quantity_tags: tuple[str, ...] = ()
    laugh_count: int = 0
    exclamation_count: int = 0
    interrogation_count: int = 0
    emojis: tuple[str, ...] = ()
    # tense tag of every verb seen during lemmatization (including dropped ones)
    tenses: tuple[str, ...] = ()

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "tokens": list(self.tokens),
            "tickers": list(self.tickers),
            "mentions": list(self.mentions),
            "hashtags": list(self.hashtags),
            "quantity_tags": list(self.quantity_tags),
            "laugh_count": self.laugh_count,
            "exclamation_count": self.exclamation_count,
            "interrogation_count": self.interrogation_count,
            "emojis": list(self.emojis),
            "tenses": list(self.tenses),
        }

    @classmethod
    def from_json(cls, row: dict) -> "ProcessedTweet":
        return cls(
            id=int(row["id"]),
            tokens=tuple(row["tokens"]),
            tickers=tuple(row.get("tickers", ())),
            mentions=tuple(row.get("mentions", ())),
            hashtags=tuple(row.get("hashtags", ())),
            quantity_tags=tuple(row.get("quantity_tags", ())),
            laugh_count=int(row.get("laugh_count", 0)),
            exclamation_count=int(row.get("exclamation_count", 0)),
            interrogation_count=int(row.get("interrogation_count", 0)),
            emojis=tuple(row.get("emojis", ())),
            tenses=tuple(row.get("tenses", ())),
        )


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.keep


def _contains_phrase(text_words: Sequence[str], phrase_words: Sequence[str]) -> bool:
    n = len(phrase_words)
    if n == 0:
        return False
    return any(list(text_words[i : i + n]) == list(phrase_words) for i in range(len(text_words) - n + 1))


def filter_relevant(
    tweet: AnnotatedTweet | str, config: FilterConfig, lexicon: FrequencyLexicon
) -> FilterDecision:
    """Keep finance-related Spanish tweets; discard spam and off-language text."""
    text = tweet.text if isinstance(tweet, AnnotatedTweet) else tweet
    text_words = words(text)
    for phrase in config.spam_phrases:
        if _contains_phrase(text_words, words(phrase)):
            return FilterDecision(False, "spam")

    stripped, tickers, _, hashtags = extract_markers(text)
    plain = [w for w in words(stripped) if not is_laughter(w)]
    if plain:
        coverage = sum(w in lexicon for w in plain) / len(plain)
        if coverage < config.language_coverage_threshold:
            return FilterDecision(False, "language")

    if config.require_finance_marker:
        known_tickers = tickers or (isinstance(tweet, AnnotatedTweet) and tweet.tickers)
        index_tag = any(h.casefold() in config.index_hashtags for h in hashtags)
        quantity = QUANTITY_RE.search(stripped) is not None
        if not (known_tickers or index_tag or quantity):
            return FilterDecision(False, "no_finance_marker")
    return FilterDecision(True)


def jaccard_similarity(a: Iterable, b: Iterable) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


@dataclass
class DedupResult:
    survivors: list[int]
    # survivor id -> ids dropped as its near-duplicates
    groups: dict[int, list[int]] = field(default_factory=dict)

    @property
    def dropped(self) -> list[int]:
        return sorted(i for ids in self.groups.values() for i in ids)


def deduplicate(corpus: Sequence[ProcessedTweet], threshold: float = 0.75) -> DedupResult:
    """Greedy near-duplicate removal in id order.

    A tweet is dropped when its token-set similarity to any earlier
    survivor reaches ``threshold``; it joins the first such survivor's group.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    survivors: list[ProcessedTweet] = []
    token_sets: list[set] = []
    groups: dict[int, list[int]] = {}
    for tweet in sorted(corpus, key=lambda t: t.id):
        tokens = set(tweet.tokens)
        for kept, kept_tokens in zip(survivors, token_sets):
            if jaccard_similarity(tokens, kept_tokens) >= threshold:
                groups[kept.id].append(tweet.id)
                break
        else:
            survivors.append(tweet)
            token_sets.append(tokens)
            groups[tweet.id] = []
    return DedupResult([t.id for t in survivors], {k: v for k, v in groups.items() if v})


_EMOJI_OR_WORD_RE = re.compile(EMOJI_TOKEN_RE.pattern + "|" + WORD_RE.pattern)


def _correct_words(text: str, resources: Resources) -> str:
    lexicon = resources.lexicon

    def fix(match: re.Match) -> str:
        word = match.group(0)
        if word.startswith(":") or word == LAUGH_TAG or is_laughter(word) or word in lexicon:
            return word
        corrected = correct_spelling(word, lexicon, resources.max_edit)
        # words that stay unknown are treated as foreign and dropped
        return corrected if corrected in lexicon else " "

    return _EMOJI_OR_WORD_RE.sub(fix, text)


def preprocess_pipeline(tweet: AnnotatedTweet | str, resources: Resources, tweet_id: int = 0) -> ProcessedTweet:
    """Run the full text pipeline on one tweet.

    Order: marker extraction (hashtags and mentions are segmented and the
    words put back in place; index hashtags are dropped), spelling
    correction, quantity/laughter tags, tokenization, stop-word removal,
    lemmatization.
    """
    if isinstance(tweet, AnnotatedTweet):
        text, tweet_id, given_tickers = tweet.text, tweet.id, tweet.tickers
    else:
        text, given_tickers = tweet, ()

    tickers: list[str] = []
    mentions: list[str] = []
    hashtags: list[str] = []
    lexicon = resources.lexicon

    def expand(kind: str, value: str) -> str:
        if kind == "ticker":
            tickers.append(value)
            return " "
        if kind == "mention":
            mentions.append(value)
        elif kind == "hashtag":
            hashtags.append(value)
            if value.casefold() in resources.index_hashtags:
                return " "
        else:
            return " "
        if not value.isalpha():
            return " "
        pieces = split_compound(value, lexicon)
        if all(p in lexicon for p in pieces):
            return " " + " ".join(pieces) + " "
        return " "

    text = replace_markers(text, expand)
    text, emojis = replace_emojis(text)
    text = _correct_words(text, resources)
    text, quantity_tags, laughs = normalize_quantities_and_laughter(text)
    raw_tokens = tokenize(text)

    kept = remove_stopwords(raw_tokens, resources.stopwords, resources.keepwords)
    tokens: list[str] = []
    tenses: list[str] = []
    for token in kept:
        if token.startswith(":") or token == LAUGH_TAG or not token.isalpha():
            tokens.append(token)
            continue
        lemma, tense = lemmatize(token, resources.lemmas)
        if tense != "none":
            tenses.append(tense)
        # a lemma can itself be a stop word (estamos -> estar)
        if lemma.casefold() in resources.stopwords and lemma.casefold() not in resources.keepwords:
            continue
        tokens.append(lemma)

    all_tickers = list(dict.fromkeys([*tickers, *(t.upper() for t in given_tickers)]))
    return ProcessedTweet(
        id=tweet_id,
        tokens=tuple(tokens),
        tickers=tuple(all_tickers),
        mentions=tuple(mentions),
        hashtags=tuple(hashtags),
        quantity_tags=tuple(quantity_tags),
        laugh_count=laughs,
        exclamation_count=raw_tokens.count("!"),
        interrogation_count=raw_tokens.count("?"),
        emojis=tuple(emojis),
        tenses=tuple(tenses),
    )
