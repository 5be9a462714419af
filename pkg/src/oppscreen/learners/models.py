"""Binary probabilistic classifiers: logistic GD, linear SVC, CART, random forest."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .isotonic import IsotonicMap, fit_isotonic
from .tree import Tree, build_tree, resolve_max_features

MODEL_FORMAT_VERSION = 1

ALGORITHMS = ("gd", "dt", "svc", "rf")

DEFAULTS: dict[str, dict[str, Any]] = {
    "gd": {"learning_rate": 0.1, "epochs": 100, "l2": 0.0, "batch_size": None},
    "svc": {"lam": 1e-4, "epochs": 50, "calibration_fraction": 0.2},
    "dt": {"max_depth": None, "min_leaf": 1},
    "rf": {"n_trees": 100, "max_depth": None, "min_leaf": 1, "max_features": "sqrt", "bootstrap": True},
}


class TrainingError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    algorithm: str
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        unknown = set(self.params) - set(DEFAULTS[self.algorithm])
        if unknown:
            raise ValueError(f"unknown {self.algorithm} parameter(s): {sorted(unknown)}")
        for key, value in self.params.items():
            if isinstance(value, (int, float)) and not isinstance(value, bool) and value <= 0 and key != "l2":
                raise ValueError(f"{key} must be positive")

    @property
    def resolved(self) -> dict[str, Any]:
        return {**DEFAULTS[self.algorithm], **self.params}

    def with_params(self, **params) -> "TrainConfig":
        return TrainConfig(self.algorithm, {**self.params, **params}, self.seed)

    def to_json(self) -> dict:
        return {"algorithm": self.algorithm, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_json(cls, data: Mapping) -> "TrainConfig":
        return cls(data["algorithm"], dict(data.get("params", {})), int(data.get("seed", 0)))


def _normalize_rows(X: np.ndarray) -> np.ndarray:
    """Scale rows to unit L2 norm and append a bias column."""
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    Xn = X / np.where(norms > 0, norms, 1.0)
    return np.hstack([Xn, np.ones((X.shape[0], 1))])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def logistic_loss(w: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float = 0.0) -> float:
    z = X @ w
    # log(1 + e^z) - y z, computed stably
    loss = np.logaddexp(0.0, z) - y * z
    return float(loss.mean() + 0.5 * l2 * (w[:-1] @ w[:-1]))


class ProbabilisticModel:
    """Common surface: ``classes``, ``n_features``, ``predict_proba``."""

    algorithm: str = ""

    def __init__(self, classes: Sequence, n_features: int, params: Mapping[str, Any]):
        self.classes = tuple(classes)
        self.n_features = int(n_features)
        self.params = dict(params)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def positive_proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_proba(self, X) -> np.ndarray:
        """``(n, 2)`` probabilities ordered as ``self.classes``."""
        p1 = np.clip(self.positive_proba(self._check(X)), 0.0, 1.0)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> list:
        proba = self.predict_proba(X)
        return [self.classes[i] for i in proba.argmax(axis=1)]

    def payload(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "algorithm": self.algorithm,
            "classes": list(self.classes),
            "n_features": self.n_features,
            "params": self.params,
            **self.payload(),
        }


class LogisticGD(ProbabilisticModel):
    algorithm = "gd"

    def __init__(self, classes, n_features, params, weights: np.ndarray, loss_history: Sequence[float] = ()):
        super().__init__(classes, n_features, params)
        self.weights = np.asarray(weights, dtype=float)
        self.loss_history = list(loss_history)

    @classmethod
    def fit(cls, X, y, classes, params, rng: np.random.Generator) -> "LogisticGD":
        Xb = _normalize_rows(X)
        w = np.zeros(Xb.shape[1])
        lr, l2 = float(params["learning_rate"]), float(params["l2"])
        batch = params["batch_size"]
        history = [logistic_loss(w, Xb, y, l2)]
        n = Xb.shape[0]
        for _ in range(int(params["epochs"])):
            if batch is None or batch >= n:
                batches = [np.arange(n)]
            else:
                perm = rng.permutation(n)
                batches = [perm[i : i + int(batch)] for i in range(0, n, int(batch))]
            for idx in batches:
                Xi, yi = Xb[idx], y[idx]
                grad = Xi.T @ (_sigmoid(Xi @ w) - yi) / idx.size
                grad[:-1] += l2 * w[:-1]
                w = w - lr * grad
            history.append(logistic_loss(w, Xb, y, l2))
        return cls(classes, X.shape[1], params, w, history)

    def decision_function(self, X) -> np.ndarray:
        return _normalize_rows(self._check(X)) @ self.weights

    def positive_proba(self, X):
        return _sigmoid(_normalize_rows(X) @ self.weights)

    def payload(self) -> dict:
        return {"weights": self.weights.tolist(), "loss_history": self.loss_history}

    @classmethod
    def from_payload(cls, data):
        return cls(data["classes"], data["n_features"], data["params"], data["weights"], data.get("loss_history", ()))


class LinearSVC(ProbabilisticModel):
    """Hinge-loss linear classifier with isotonic-calibrated margins."""

    algorithm = "svc"

    def __init__(self, classes, n_features, params, weights: np.ndarray, calibration: IsotonicMap):
        super().__init__(classes, n_features, params)
        self.weights = np.asarray(weights, dtype=float)
        self.calibration = calibration

    @staticmethod
    def _pegasos(Xb: np.ndarray, y: np.ndarray, lam: float, epochs: int, rng) -> np.ndarray:
        signs = np.where(y > 0, 1.0, -1.0)
        w = np.zeros(Xb.shape[1])
        radius = 1.0 / np.sqrt(lam)
        t = 0
        for _ in range(epochs):
            for i in rng.permutation(Xb.shape[0]):
                t += 1
                eta = 1.0 / (lam * t)
                margin = signs[i] * (Xb[i] @ w)
                w *= 1.0 - eta * lam
                if margin < 1.0:
                    w += eta * signs[i] * Xb[i]
                norm = np.linalg.norm(w)
                if norm > radius:
                    w *= radius / norm
        return w

    @classmethod
    def fit(cls, X, y, classes, params, rng: np.random.Generator) -> "LinearSVC":
        Xb = _normalize_rows(X)
        fit_idx, cal_idx = _calibration_split(y, float(params["calibration_fraction"]), rng)
        w = cls._pegasos(Xb[fit_idx], y[fit_idx], float(params["lam"]), int(params["epochs"]), rng)
        margins = Xb[cal_idx] @ w
        calibration = fit_isotonic(y[cal_idx], x=margins)
        return cls(classes, X.shape[1], params, w, calibration)

    def decision_function(self, X) -> np.ndarray:
        return _normalize_rows(self._check(X)) @ self.weights

    def positive_proba(self, X):
        return self.calibration(_normalize_rows(X) @ self.weights)

    def payload(self) -> dict:
        return {"weights": self.weights.tolist(), "calibration": self.calibration.to_json()}

    @classmethod
    def from_payload(cls, data):
        return cls(data["classes"], data["n_features"], data["params"], data["weights"], IsotonicMap.from_json(data["calibration"]))


def _calibration_split(y: np.ndarray, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Stratified hold-out; falls back to calibrating on the training rows
    when a class is too small to appear on both sides."""
    fit_parts, cal_parts = [], []
    for label in (0, 1):
        members = rng.permutation(np.flatnonzero(y == label))
        n_cal = int(round(fraction * members.size))
        if n_cal < 1 or members.size - n_cal < 1:
            idx = np.arange(y.size)
            return idx, idx
        cal_parts.append(members[:n_cal])
        fit_parts.append(members[n_cal:])
    return np.sort(np.concatenate(fit_parts)), np.sort(np.concatenate(cal_parts))


class DecisionTreeModel(ProbabilisticModel):
    algorithm = "dt"

    def __init__(self, classes, n_features, params, tree: Tree):
        super().__init__(classes, n_features, params)
        self.tree = tree

    @classmethod
    def fit(cls, X, y, classes, params, rng) -> "DecisionTreeModel":
        tree = build_tree(X, y, max_depth=params["max_depth"], min_leaf=int(params["min_leaf"]))
        return cls(classes, X.shape[1], params, tree)

    def positive_proba(self, X):
        return self.tree.leaf_distribution(X)[:, 1]

    def payload(self) -> dict:
        return {"tree": self.tree.to_json()}

    @classmethod
    def from_payload(cls, data):
        return cls(data["classes"], data["n_features"], data["params"], Tree.from_json(data["tree"]))


class RandomForestModel(ProbabilisticModel):
    """Mean of per-tree leaf class distributions."""

    algorithm = "rf"

    def __init__(self, classes, n_features, params, trees: Sequence[Tree]):
        super().__init__(classes, n_features, params)
        self.trees = list(trees)

    @classmethod
    def fit(cls, X, y, classes, params, rng, seed: int = 0) -> "RandomForestModel":
        n, d = X.shape
        m = resolve_max_features(params["max_features"], d)
        trees = []
        for b in range(int(params["n_trees"])):
            # one generator per tree keeps results independent of build order
            tree_rng = np.random.default_rng([seed, b])
            idx = tree_rng.integers(0, n, size=n) if params["bootstrap"] else np.arange(n)
            Xb, yb = X[idx], y[idx]
            trees.append(
                build_tree(
                    Xb,
                    yb,
                    max_depth=params["max_depth"],
                    min_leaf=int(params["min_leaf"]),
                    max_features=m,
                    rng=tree_rng,
                )
            )
        return cls(classes, d, params, trees)

    def positive_proba(self, X):
        return np.mean([t.leaf_distribution(X)[:, 1] for t in self.trees], axis=0)

    def payload(self) -> dict:
        return {"trees": [t.to_json() for t in self.trees]}

    @classmethod
    def from_payload(cls, data):
        return cls(data["classes"], data["n_features"], data["params"], [Tree.from_json(t) for t in data["trees"]])


_MODEL_TYPES = {cls.algorithm: cls for cls in (LogisticGD, LinearSVC, DecisionTreeModel, RandomForestModel)}


def train(config: TrainConfig, X, y) -> ProbabilisticModel:
    """Fit a binary model; deterministic given ``config.seed``."""
    X = np.asarray(X, dtype=float)
    y_raw = list(y)
    if X.ndim != 2 or X.shape[0] != len(y_raw):
        raise TrainingError("X must be 2-D with one row per label")
    if X.shape[0] < 2:
        raise TrainingError("need at least two samples")
    if not np.isfinite(X).all():
        raise TrainingError("features must be finite")
    classes = sorted(set(y_raw), key=lambda c: (str(type(c)), c))
    if len(classes) != 2:
        raise TrainingError(f"binary training needs exactly two classes, got {classes}")
    yb = np.array([classes.index(v) for v in y_raw], dtype=float)
    params = config.resolved
    rng = np.random.default_rng(config.seed)
    model_cls = _MODEL_TYPES[config.algorithm]
    if model_cls is RandomForestModel:
        return RandomForestModel.fit(X, yb, classes, params, rng, seed=config.seed)
    return model_cls.fit(X, yb, classes, params, rng)


def predict_proba(model: ProbabilisticModel, x) -> np.ndarray:
    return model.predict_proba(x)


def model_from_json(data: Mapping) -> ProbabilisticModel:
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"model format_version {version!r} is not {MODEL_FORMAT_VERSION}")
    try:
        model_cls = _MODEL_TYPES[data["algorithm"]]
    except KeyError:
        raise ModelFormatError(f"unknown algorithm {data.get('algorithm')!r}") from None
    return model_cls.from_payload(data)


def save_model(model: ProbabilisticModel, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(model.to_json(), sort_keys=True), encoding="utf-8")
    tmp.replace(path)


def load_model(path: str | Path) -> ProbabilisticModel:
    return model_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
