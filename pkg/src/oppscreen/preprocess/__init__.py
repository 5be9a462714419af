"""Tweet normalization: filtering, marker extraction, spelling, lemmas."""

from .pipeline import (
    DedupResult,
    FilterDecision,
    ProcessedTweet,
    deduplicate,
    filter_relevant,
    jaccard_similarity,
    preprocess_pipeline,
)
from .resources import (
    FilterConfig,
    FrequencyLexicon,
    LemmaDictionary,
    LemmaEntry,
    Resources,
    data_path,
    load_resources,
)
from .text import (
    correct_spelling,
    extract_markers,
    lemmatize,
    normalize_quantities_and_laughter,
    remove_stopwords,
    split_compound,
    tokenize,
)

__all__ = [
    "DedupResult",
    "FilterConfig",
    "FilterDecision",
    "FrequencyLexicon",
    "LemmaDictionary",
    "LemmaEntry",
    "ProcessedTweet",
    "Resources",
    "correct_spelling",
    "data_path",
    "deduplicate",
    "extract_markers",
    "filter_relevant",
    "jaccard_similarity",
    "lemmatize",
    "load_resources",
    "normalize_quantities_and_laughter",
    "preprocess_pipeline",
    "remove_stopwords",
    "split_compound",
    "tokenize",
]
