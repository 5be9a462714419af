"""Stacked binary classifiers with a shared decision depth.

Each layer routes a tweet either to a final label or on to the next
layer. When the winning class probability at a layer falls below the
depth, the tweet abstains and is labelled Neutral.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import EmotionLabel
from .features import (
    FeatureSpace,
    GramConfig,
    SelectionMask,
    SentimentLexicons,
    chi2_scores,
    design_matrix,
    fit_feature_space,
    load_json,
    save_json,
    select_percentile,
    vectorize,
)
from .learners import ProbabilisticModel, TrainConfig, TrainingError, model_from_json, train
from .metrics import ToleranceReport, confusion, tolerances
from .preprocess.pipeline import ProcessedTweet

CASCADE_FORMAT_VERSION = 1

S_POS = EmotionLabel.POSITIVE_STATEMENT
P_POS = EmotionLabel.OPPORTUNITY
NEUTRAL = EmotionLabel.NEUTRAL
A_NEG = EmotionLabel.NEGATIVE_AWARENESS


class CascadeTrainingError(RuntimeError):
    def __init__(self, layer: int, message: str):
        super().__init__(f"layer {layer}: {message}")
        self.layer = layer


class CascadeFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    """Binary routing rule.

    ``members`` maps each layer class to the gold labels it covers;
    ``outcome`` maps it to a final label, or None to continue downstream.
    """

    members: Mapping[str, tuple[EmotionLabel, ...]]
    outcome: Mapping[str, EmotionLabel | None]

    def __post_init__(self) -> None:
        if len(self.members) != 2 or set(self.members) != set(self.outcome):
            raise ValueError("a layer has exactly two classes with an outcome each")

    @property
    def covered(self) -> frozenset[EmotionLabel]:
        return frozenset(label for labels in self.members.values() for label in labels)

    def target(self, label: EmotionLabel) -> str:
        for name, labels in self.members.items():
            if label in labels:
                return name
        raise KeyError(label)

    def to_json(self) -> dict:
        return {
            "members": {k: [str(v) for v in vs] for k, vs in sorted(self.members.items())},
            "outcome": {k: None if v is None else str(v) for k, v in sorted(self.outcome.items())},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "LayerSpec":
        members = {k: tuple(EmotionLabel.parse(v) for v in vs) for k, vs in data["members"].items()}
        outcome = {k: None if v is None else EmotionLabel.parse(v) for k, v in data["outcome"].items()}
        return cls(members, outcome)


ARCHITECTURES: dict[str, tuple[LayerSpec, ...]] = {
    # opportunities against everything else; "rest" is reported as Neutral
    "single_layer": (
        LayerSpec({"P+": (P_POS,), "rest": (S_POS, NEUTRAL, A_NEG)}, {"P+": P_POS, "rest": NEUTRAL}),
    ),
    "two_layer": (
        LayerSpec({"N": (NEUTRAL,), "rest": (S_POS, P_POS, A_NEG)}, {"N": NEUTRAL, "rest": None}),
        LayerSpec({"P+": (P_POS,), "rest": (S_POS, A_NEG)}, {"P+": P_POS, "rest": NEUTRAL}),
    ),
    "three_layer": (
        LayerSpec({"N": (NEUTRAL,), "rest": (S_POS, P_POS, A_NEG)}, {"N": NEUTRAL, "rest": None}),
        LayerSpec({"A-": (A_NEG,), "pos": (S_POS, P_POS)}, {"A-": A_NEG, "pos": None}),
        LayerSpec({"P+": (P_POS,), "S+": (S_POS,)}, {"P+": P_POS, "S+": S_POS}),
    ),
}


def _default_grams() -> tuple[GramConfig, ...]:
    return (GramConfig("char"), GramConfig("char_word_boundary"), GramConfig("word", (1, 3)))


@dataclass(frozen=True)
class CascadeConfig:
    layers: tuple[TrainConfig, ...]
    depth: float = 0.75
    percentile: float = 100.0
    grams: tuple[GramConfig, ...] = field(default_factory=_default_grams)
    use_dense: bool = True
    architecture: str = "three_layer"

    def __post_init__(self) -> None:
        if not 0.0 <= self.depth <= 1.0:
            raise ValueError("depth must lie in [0, 1]")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        expected = len(ARCHITECTURES[self.architecture])
        if len(self.layers) != expected:
            raise ValueError(f"{self.architecture} needs {expected} layer configs, got {len(self.layers)}")
        if not self.grams and not self.use_dense:
            raise ValueError("at least one gram family or the dense counters is required")

    @classmethod
    def uniform(cls, train_config: TrainConfig, architecture: str = "three_layer", **kwargs) -> "CascadeConfig":
        n = len(ARCHITECTURES[architecture])
        return cls(layers=(train_config,) * n, architecture=architecture, **kwargs)


@dataclass
class CascadeLayer:
    spec: LayerSpec
    model: ProbabilisticModel
    space: FeatureSpace
    mask: SelectionMask

    def __post_init__(self) -> None:
        self._masked = self.space.masked(self.mask)

    def matrix(self, tweets: Sequence[ProcessedTweet], lexicons: SentimentLexicons) -> np.ndarray:
        vectors = [vectorize(t, self._masked, lexicons) for t in tweets]
        X = design_matrix(vectors, self._masked.n_sparse)
        return X.reshape(len(tweets), self._masked.width)

    def probabilities(self, tweets: Sequence[ProcessedTweet], lexicons: SentimentLexicons) -> np.ndarray:
        """``(n, 2)`` probabilities in ``model.classes`` order."""
        if not tweets:
            return np.zeros((0, 2))
        return self.model.predict_proba(self.matrix(tweets, lexicons))


@dataclass(frozen=True)
class Classification:
    label: EmotionLabel
    # winning-class probability at each layer reached
    confidences: tuple[float, ...]
    abstained: bool
    abstained_layer: int | None = None

    def to_json(self) -> dict:
        return {
            "label": str(self.label),
            "confidences": list(self.confidences),
            "abstained": self.abstained,
            "abstained_layer": self.abstained_layer,
        }


@dataclass
class CascadeModel:
    layers: list[CascadeLayer]
    depth: float
    architecture: str = "three_layer"
    lexicons: SentimentLexicons = field(default_factory=SentimentLexicons.load, repr=False)

    def layer_probabilities(self, tweets: Sequence[ProcessedTweet]) -> list[list[dict[str, float]]]:
        """Per tweet, per layer, class -> probability (every layer is evaluated)."""
        per_layer = [layer.probabilities(tweets, self.lexicons) for layer in self.layers]
        out = []
        for i in range(len(tweets)):
            out.append(
                [dict(zip(layer.model.classes, map(float, probs[i]))) for layer, probs in zip(self.layers, per_layer)]
            )
        return out

    def classify_many(self, tweets: Sequence[ProcessedTweet], depth: float | None = None) -> list[Classification]:
        depth = self.depth if depth is None else depth
        specs = [layer.spec for layer in self.layers]
        orders = [layer.model.classes for layer in self.layers]
        return [decide(specs, probs, depth, orders) for probs in self.layer_probabilities(tweets)]

    def classify(self, tweet: ProcessedTweet, depth: float | None = None) -> Classification:
        return self.classify_many([tweet], depth)[0]

    def to_json(self) -> dict:
        return {
            "format_version": CASCADE_FORMAT_VERSION,
            "architecture": self.architecture,
            "depth": self.depth,
            "layers": [layer.spec.to_json() for layer in self.layers],
        }


def decide(
    specs: Sequence[LayerSpec],
    probabilities: Sequence[Mapping[str, float]],
    depth: float,
    orders: Sequence[Sequence[str]] | None = None,
) -> Classification:
    """Walk the layers; the most likely class must reach ``depth`` to count.

    Ties between the two classes go to the first one in ``orders`` (the
    model's class order), matching a plain argmax.
    """
    confidences: list[float] = []
    for i, (spec, probs) in enumerate(zip(specs, probabilities)):
        order = list(orders[i]) if orders is not None else sorted(probs)
        best = max(order, key=lambda c: (probs[c], -order.index(c)))
        confidences.append(probs[best])
        if probs[best] < depth:
            return Classification(NEUTRAL, tuple(confidences), True, i + 1)
        outcome = spec.outcome[best]
        if outcome is not None:
            return Classification(outcome, tuple(confidences), False)
    raise ValueError("the last layer must end in a final label")


def _layer_train_config(config: TrainConfig, layer: int) -> TrainConfig:
    # distinct but reproducible randomness per layer
    return TrainConfig(config.algorithm, config.params, config.seed * 10 + layer)


def train_layer(
    spec: LayerSpec,
    tweets: Sequence[ProcessedTweet],
    labels: Sequence[EmotionLabel],
    train_config: TrainConfig,
    grams: Sequence[GramConfig],
    percentile: float = 100.0,
    use_dense: bool = True,
    lexicons: SentimentLexicons | None = None,
) -> CascadeLayer:
    """Fit one layer's vocabulary, chi-squared mask and model on the labels it covers."""
    lexicons = lexicons or SentimentLexicons.load()
    subset = [(t, lab) for t, lab in zip(tweets, labels) if lab in spec.covered]
    sub_tweets = [t for t, _ in subset]
    targets = [spec.target(lab) for _, lab in subset]
    missing = sorted(set(spec.members) - set(targets))
    if missing:
        raise TrainingError(f"no training samples for class(es) {missing}")
    space = fit_feature_space(sub_tweets, grams, use_dense)
    full = design_matrix([vectorize(t, space, lexicons) for t in sub_tweets], space.n_sparse)
    full = full.reshape(len(sub_tweets), space.width)
    sparse = full[:, : space.n_sparse]
    scores = chi2_scores(sparse, targets) if space.n_sparse else np.zeros(0)
    mask = select_percentile(scores.tolist(), percentile)
    X = np.hstack([sparse[:, list(mask.retained)], full[:, space.n_sparse :]])
    return CascadeLayer(spec, train(train_config, X, targets), space, mask)


def train_cascade(
    tweets: Sequence[ProcessedTweet],
    labels: Sequence[EmotionLabel],
    config: CascadeConfig,
    lexicons: SentimentLexicons | None = None,
) -> CascadeModel:
    """Train every layer on the gold labels it routes.

    Vocabularies and chi-squared masks are fitted per layer on that
    layer's own training subset.
    """
    if len(tweets) != len(labels):
        raise ValueError("tweets and labels differ in length")
    lexicons = lexicons or SentimentLexicons.load()
    layers = []
    for number, (spec, train_config) in enumerate(zip(ARCHITECTURES[config.architecture], config.layers), 1):
        try:
            layer = train_layer(
                spec,
                tweets,
                labels,
                _layer_train_config(train_config, number),
                config.grams,
                config.percentile,
                config.use_dense,
                lexicons,
            )
        except (TrainingError, ValueError) as exc:
            raise CascadeTrainingError(number, str(exc)) from exc
        layers.append(layer)
    return CascadeModel(layers, config.depth, config.architecture, lexicons)


@dataclass(frozen=True)
class DepthPoint:
    depth: float
    report: ToleranceReport
    flagged: tuple[int, ...]

    def to_json(self) -> dict:
        return {"depth": self.depth, **self.report.to_json(), "flagged": list(self.flagged)}


def sweep_depth(
    model: CascadeModel,
    tweets: Sequence[ProcessedTweet],
    labels: Sequence[EmotionLabel],
    depths: Sequence[float],
) -> list[DepthPoint]:
    """Tolerances and coverage at each depth; probabilities are computed once."""
    probs = model.layer_probabilities(tweets)
    specs = [layer.spec for layer in model.layers]
    orders = [layer.model.classes for layer in model.layers]
    points = []
    for depth in depths:
        preds = [decide(specs, p, depth, orders).label for p in probs]
        flagged = tuple(t.id for t, pred in zip(tweets, preds) if pred is P_POS)
        points.append(DepthPoint(float(depth), tolerances(confusion(list(labels), preds)), flagged))
    return points


def save_cascade(model: CascadeModel, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, layer in enumerate(model.layers, 1):
        save_json(layer.model.to_json(), directory / f"layer{i}.model.json")
        save_json(layer.space.to_json(), directory / f"vocab{i}.json")
        save_json(layer.mask.to_json(), directory / f"mask{i}.json")
    save_json(model.to_json(), directory / "cascade.json")


def load_cascade(directory: str | Path, lexicons: SentimentLexicons | None = None) -> CascadeModel:
    directory = Path(directory)
    path = directory / "cascade.json"
    if not path.exists():
        raise CascadeFormatError(f"{path}: missing cascade manifest")
    meta = load_json(path)
    if meta.get("format_version") != CASCADE_FORMAT_VERSION:
        raise CascadeFormatError(
            f"{path}: format_version {meta.get('format_version')!r} is not {CASCADE_FORMAT_VERSION}"
        )
    layers = []
    for i, spec_json in enumerate(meta["layers"], 1):
        model = model_from_json(load_json(directory / f"layer{i}.model.json"))
        space = FeatureSpace.from_json(load_json(directory / f"vocab{i}.json"))
        mask = SelectionMask.from_json(load_json(directory / f"mask{i}.json"))
        layers.append(CascadeLayer(LayerSpec.from_json(spec_json), model, space, mask))
    return CascadeModel(layers, float(meta["depth"]), meta["architecture"], lexicons or SentimentLexicons.load())
