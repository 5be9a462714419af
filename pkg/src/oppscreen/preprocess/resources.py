"""Lexicon and word-list resources used by the text pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources as _ilr
from pathlib import Path
from typing import Mapping

TENSES = ("past", "present", "future", "conditional", "none")


def data_path(name: str) -> Path:
    """Path of a file bundled under ``oppscreen/data``."""
    return Path(str(_ilr.files("oppscreen") / "data" / name))


class FrequencyLexicon:
    """Word frequencies; lookups are case-folded but keep accents."""

    def __init__(self, entries: Mapping[str, int]):
        self.entries: dict[str, int] = {}
        for word, freq in entries.items():
            if freq < 0:
                raise ValueError(f"negative frequency for {word!r}")
            key = word.casefold()
            self.entries[key] = self.entries.get(key, 0) + int(freq)
        self.total = sum(self.entries.values())
        self._by_length: dict[int, list[str]] | None = None
        self._corrections: dict[tuple[str, int], str] = {}

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def freq(self, word: str) -> int:
        return self.entries.get(word.casefold(), 0)

    def log_prob(self, word: str) -> float:
        return math.log(self.freq(word) / self.total)

    def words_of_length(self, n: int) -> list[str]:
        if self._by_length is None:
            by_length: dict[int, list[str]] = {}
            for word in sorted(self.entries):
                by_length.setdefault(len(word), []).append(word)
            self._by_length = by_length
        return self._by_length.get(n, [])

    @classmethod
    def load(cls, path: str | Path) -> "FrequencyLexicon":
        entries: dict[str, int] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                word, freq = line.split("\t")
                entries[word] = entries.get(word, 0) + int(freq)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected 'word<TAB>frequency'") from None
        return cls(entries)


@dataclass(frozen=True)
class LemmaEntry:
    lemma: str
    pos: str
    tense: str = "none"


class LemmaDictionary:
    def __init__(self, entries: Mapping[str, LemmaEntry]):
        for surface, entry in entries.items():
            if not entry.lemma:
                raise ValueError(f"empty lemma for {surface!r}")
            if entry.tense not in TENSES:
                raise ValueError(f"unknown tense {entry.tense!r} for {surface!r}")
        self.entries = {k.casefold(): v for k, v in entries.items()}

    def get(self, surface: str) -> LemmaEntry | None:
        return self.entries.get(surface.casefold())

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def load(cls, path: str | Path) -> "LemmaDictionary":
        entries: dict[str, LemmaEntry] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected surface, lemma, pos, tense")
            surface, lemma, pos, tense = parts
            if surface.casefold() in entries:
                raise ValueError(f"{path}:{lineno}: duplicate surface form {surface!r}")
            entries[surface.casefold()] = LemmaEntry(lemma, pos, tense)
        return cls(entries)


def load_word_list(path: str | Path) -> frozenset[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(w.strip().casefold() for w in lines if w.strip() and not w.startswith("#"))


def load_phrase_list(path: str | Path) -> tuple[str, ...]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return tuple(w.strip() for w in lines if w.strip() and not w.startswith("#"))


@dataclass(frozen=True)
class FilterConfig:
    spam_phrases: tuple[str, ...] = ()
    language_coverage_threshold: float = 0.5
    jaccard_threshold: float = 0.75
    require_finance_marker: bool = True
    index_hashtags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for name in ("language_coverage_threshold", "jaccard_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class Resources:
    """Everything the preprocessing pipeline reads."""

    lexicon: FrequencyLexicon
    lemmas: LemmaDictionary
    stopwords: frozenset[str]
    keepwords: frozenset[str]
    filter: FilterConfig = field(default_factory=FilterConfig)
    max_edit: int = 2

    @property
    def index_hashtags(self) -> frozenset[str]:
        return self.filter.index_hashtags


BUNDLED = {
    "lexicon": "lexicon_es.tsv",
    "lemmas": "lemmas_es.tsv",
    "stopwords": "stopwords_es.txt",
    "keepwords": "keepwords_es.txt",
    "spam": "spam_es.txt",
    "index_hashtags": "index_hashtags.txt",
}


def load_resources(
    paths: Mapping[str, str | Path] | None = None,
    *,
    language_coverage_threshold: float = 0.5,
    jaccard_threshold: float = 0.75,
    require_finance_marker: bool = True,
    max_edit: int = 2,
) -> Resources:
    """Load pipeline resources, falling back to the bundled files."""
    paths = dict(paths or {})
    resolved = {key: Path(paths[key]) if paths.get(key) else data_path(name) for key, name in BUNDLED.items()}
    filter_config = FilterConfig(
        spam_phrases=load_phrase_list(resolved["spam"]),
        language_coverage_threshold=language_coverage_threshold,
        jaccard_threshold=jaccard_threshold,
        require_finance_marker=require_finance_marker,
        index_hashtags=load_word_list(resolved["index_hashtags"]),
    )
    return Resources(
        lexicon=FrequencyLexicon.load(resolved["lexicon"]),
        lemmas=LemmaDictionary.load(resolved["lemmas"]),
        stopwords=load_word_list(resolved["stopwords"]),
        keepwords=load_word_list(resolved["keepwords"]),
        filter=filter_config,
        max_edit=max_edit,
    )
