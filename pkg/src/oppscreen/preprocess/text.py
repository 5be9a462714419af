"""String-level transformations applied to raw tweets."""

from __future__ import annotations

import re
import unicodedata
from typing import Callable, Iterable

from .resources import FrequencyLexicon, LemmaDictionary

URL_RE = re.compile(r"https?://\S+|www\.\S+", re.IGNORECASE)

# one alternation so that replacements can keep positions
MARKER_RE = re.compile(
    r"(?P<url>https?://\S+|www\.\S+)"
    r"|(?<!\w)(?P<rt>RT)\b:?"
    r"|(?<![\w$])\$(?P<ticker>[A-Z][A-Z0-9]*)"
    r"|(?<!\w)@(?P<mention>\w+)"
    r"|(?<![\w&])#(?P<hashtag>\w+)"
)

QUANTITY_RE = re.compile(
    r"(?<![\w.,])(?P<sign>[+\-−]?)\d+(?:[.,]\d+)*(?P<pct>\s*(?:%|por\s+ciento\b))?(?!\w)",
    re.IGNORECASE,
)

# j or h alternating with a/e/i, one consonant repeated: jaja, jajaja, hehe, ajaja
LAUGH_RE = re.compile(r"(?<!\w)[aei]?([jh])[aei](?:\1[aei])+\1?(?!\w)", re.IGNORECASE)

LAUGH_TAG = "LAUGH"

WORD_RE = re.compile(r"[^\W\d_]+")

EMOJI_TOKEN_RE = re.compile(r":[a-z0-9_]+:")

TOKEN_RE = re.compile(r":[a-z0-9_]+:|LAUGH|[^\W\d_]+|[+\-]|[!?]")

EMOTICONS = {
    ":)": "slightly_smiling_face",
    ":-)": "slightly_smiling_face",
    ":(": "slightly_frowning_face",
    ":-(": "slightly_frowning_face",
    ":D": "grinning_face",
}
EMOTICON_RE = re.compile(r"(?<!\S)(?::-?\)|:-?\(|:D)(?!\S)")

CALENDAR_WORDS = frozenset(
    "lunes martes miércoles jueves viernes sábado domingo "
    "enero febrero marzo abril mayo junio julio agosto septiembre "
    "octubre noviembre diciembre".split()
)


def collapse_spaces(text: str) -> str:
    return " ".join(text.split())


def extract_markers(text: str) -> tuple[str, list[str], list[str], list[str]]:
    """Remove tickers, mentions, hashtags, URLs and RT tags.

    Returns ``(stripped_text, tickers, mentions, hashtags)``.
    """
    tickers: list[str] = []
    mentions: list[str] = []
    hashtags: list[str] = []

    def drop(match: re.Match) -> str:
        kind = match.lastgroup
        if kind == "ticker":
            tickers.append(match.group("ticker"))
        elif kind == "mention":
            mentions.append(match.group("mention"))
        elif kind == "hashtag":
            hashtags.append(match.group("hashtag"))
        return " "

    stripped = MARKER_RE.sub(drop, text)
    if not (tickers or mentions or hashtags) and stripped == text:
        return text, [], [], []
    return collapse_spaces(stripped), tickers, mentions, hashtags


def replace_markers(text: str, replace: Callable[[str, str], str]) -> str:
    """Substitute every marker with ``replace(kind, value)``."""
    return MARKER_RE.sub(lambda m: replace(m.lastgroup, m.group(m.lastgroup)), text)


def _fold(token: str) -> str:
    # per-character lowering keeps slice positions aligned with the input
    return "".join(c.lower() if len(c.lower()) == 1 else c for c in token)


def split_compound(token: str, lexicon: FrequencyLexicon) -> list[str]:
    """Segment a glued hashtag/mention into lexicon words.

    Picks the segmentation maximizing the summed log unigram probability.
    Returns ``[token]`` when the token is already a word or no full
    segmentation exists.
    """
    if not token or token in lexicon:
        return [token]
    folded = _fold(token)
    n = len(folded)
    longest = max((len(w) for w in lexicon.entries), default=0)
    best: list[float | None] = [None] * (n + 1)
    back = [0] * (n + 1)
    best[0] = 0.0
    for end in range(1, n + 1):
        for start in range(max(0, end - longest), end):
            if best[start] is None:
                continue
            piece = folded[start:end]
            freq = lexicon.entries.get(piece)
            if not freq:
                continue
            score = best[start] + lexicon.log_prob(piece)
            if best[end] is None or score > best[end]:
                best[end] = score
                back[end] = start
    if best[n] is None:
        return [token]
    pieces = []
    end = n
    while end > 0:
        start = back[end]
        pieces.append(token[start:end])
        end = start
    return pieces[::-1]


def levenshtein(a: str, b: str, limit: int | None = None) -> int:
    """Edit distance; returns ``limit + 1`` early once it is exceeded."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if limit is not None and len(a) - len(b) > limit:
        return limit + 1
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb)))
        if limit is not None and min(current) > limit:
            return limit + 1
        previous = current
    return previous[-1]


def strip_accents(text: str) -> str:
    decomposed = unicodedata.normalize("NFD", text)
    return "".join(c for c in decomposed if unicodedata.category(c) != "Mn")


def correct_spelling(token: str, lexicon: FrequencyLexicon, max_edit: int = 2) -> str:
    """Most likely in-lexicon replacement for an unknown word.

    Candidates are ranked by edit distance, then frequency, then
    alphabetically. Distance-2 candidates must share the first letter
    (ignoring accents). Unknown words without candidates are returned as-is.
    """
    if max_edit < 1:
        raise ValueError("max_edit must be at least 1")
    if token in lexicon:
        return token
    folded = token.casefold()
    cache_key = (folded, max_edit)
    cached = lexicon._corrections.get(cache_key)
    if cached is not None:
        return cached or token
    first = strip_accents(folded[:1])
    best: tuple[int, int, str] | None = None
    for length in range(max(1, len(folded) - max_edit), len(folded) + max_edit + 1):
        for word in lexicon.words_of_length(length):
            dist = levenshtein(folded, word, max_edit)
            if dist > max_edit:
                continue
            if dist >= 2 and strip_accents(word[:1]) != first:
                continue
            key = (dist, -lexicon.entries[word], word)
            if best is None or key < best:
                best = key
    result = best[2] if best else ""
    lexicon._corrections[cache_key] = result
    return result or token


def normalize_quantities_and_laughter(text: str) -> tuple[str, list[str], int]:
    """Replace numbers by sign tags and laughter by ``LAUGH``.

    Returns ``(text, quantity_tags, laugh_count)`` where tags are PLUS,
    MINUS, PLUS_PCT or MINUS_PCT in order of appearance. Unsigned numbers
    count as positive.
    """
    tags: list[str] = []

    def quantity(match: re.Match) -> str:
        negative = match.group("sign") in ("-", "−")
        tag = "MINUS" if negative else "PLUS"
        if match.group("pct"):
            tag += "_PCT"
        tags.append(tag)
        return " - " if negative else " + "

    laughs = 0

    def laugh(match: re.Match) -> str:
        nonlocal laughs
        laughs += 1
        return f" {LAUGH_TAG} "

    out = QUANTITY_RE.sub(quantity, text)
    out = LAUGH_RE.sub(laugh, out)
    if not tags and not laughs:
        return text, [], 0
    return collapse_spaces(out), tags, laughs


def is_laughter(word: str) -> bool:
    return LAUGH_RE.fullmatch(word) is not None


def emoji_name(char: str) -> str | None:
    """Stable lowercase name for an emoji character, or None."""
    if unicodedata.category(char) != "So" or ord(char) < 0x2190:
        return None
    name = unicodedata.name(char, "")
    if not name:
        return None
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def replace_emojis(text: str) -> tuple[str, list[str]]:
    """Swap emoji (and a few emoticons) for ``:name:`` tokens."""
    names: list[str] = []

    def emoticon(match: re.Match) -> str:
        names.append(EMOTICONS[match.group(0)])
        return f" :{names[-1]}: "

    text = EMOTICON_RE.sub(emoticon, text)
    out = []
    for char in text:
        if char in ("\ufe0f", "\u200d") or 0x1F3FB <= ord(char) <= 0x1F3FF:
            continue
        name = emoji_name(char)
        if name is None:
            out.append(char)
        else:
            names.append(name)
            out.append(f" :{name}: ")
    return "".join(out), names


def tokenize(text: str) -> list[str]:
    """Split into words, sign tags, ``!``/``?`` marks and emoji tokens.

    Words are lowercased; any other punctuation is dropped.
    """
    return [t if t == LAUGH_TAG or t.startswith(":") else t.lower() for t in TOKEN_RE.findall(text)]


def remove_stopwords(
    tokens: Iterable[str], stoplist: Iterable[str], keeplist: Iterable[str] = ()
) -> list[str]:
    stop = stoplist if isinstance(stoplist, (set, frozenset)) else set(stoplist)
    keep = keeplist if isinstance(keeplist, (set, frozenset)) else set(keeplist)
    out = []
    for token in tokens:
        key = token.casefold()
        if key in keep or (key not in stop and key not in CALENDAR_WORDS):
            out.append(token)
    return out


def lemmatize(token: str, dictionary: LemmaDictionary) -> tuple[str, str]:
    entry = dictionary.get(token)
    if entry is None:
        return token, "none"
    return entry.lemma, entry.tense


def words(text: str) -> list[str]:
    return [w.casefold() for w in WORD_RE.findall(text)]
