"""Exhaustive grid search with stratified k-fold cross-validation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ..corpus import stratified_fold_indices
from .models import TrainConfig, train


class GridCellError(RuntimeError):
    def __init__(self, cell: Mapping[str, Any], fold: int, cause: Exception):
        super().__init__(f"grid cell {dict(cell)} failed on fold {fold}: {cause}")
        self.cell = dict(cell)
        self.fold = fold


@dataclass
class GridResult:
    best_params: dict[str, Any]
    best_score: float
    # (params, mean score, per-fold scores) in iteration order
    cells: list[tuple[dict[str, Any], float, list[float]]]


def iter_grid(grid: Mapping[str, Sequence]) -> list[dict[str, Any]]:
    """Cartesian product with keys sorted; repeated values are visited once."""
    if not grid:
        raise ValueError("grid must not be empty")
    keys = sorted(grid)
    values = []
    for key in keys:
        seen = list(dict.fromkeys(_hashable(v) for v in grid[key]))
        if not seen:
            raise ValueError(f"grid entry {key!r} has no values")
        values.append(seen)
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


def _hashable(value):
    return tuple(value) if isinstance(value, list) else value


def _metric(name: str) -> Callable[[np.ndarray, np.ndarray], float]:
    def accuracy(y, pred):
        return float((y == pred).mean())

    def precision(y, pred):
        flagged = pred == 1
        return float((y[flagged] == 1).mean()) if flagged.any() else 0.0

    def f1(y, pred):
        tp = float(((pred == 1) & (y == 1)).sum())
        denom = float((pred == 1).sum() + (y == 1).sum())
        return 2 * tp / denom if denom else 0.0

    try:
        return {"accuracy": accuracy, "precision": precision, "f1": f1}[name]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}") from None


def cross_validate_cells(
    cells: Sequence[Mapping[str, Any]],
    score_fold: Callable[[Mapping[str, Any], np.ndarray, np.ndarray], float],
    labels: Sequence,
    folds: int,
    seed: int,
) -> GridResult:
    """Score each cell on every fold; the first cell with the best mean wins."""
    if folds < 2:
        raise ValueError("folds must be at least 2")
    fold_of = np.asarray(stratified_fold_indices(list(labels), folds, seed))
    results = []
    for cell in cells:
        scores = []
        for fold in range(folds):
            train_idx = np.flatnonzero(fold_of != fold)
            test_idx = np.flatnonzero(fold_of == fold)
            try:
                scores.append(float(score_fold(cell, train_idx, test_idx)))
            except Exception as exc:
                raise GridCellError(cell, fold, exc) from exc
        results.append((dict(cell), float(np.mean(scores)), scores))
    best = max(range(len(results)), key=lambda i: (results[i][1], -i))
    return GridResult(results[best][0], results[best][1], results)


def grid_search(
    config: TrainConfig,
    X,
    y: Sequence,
    grid: Mapping[str, Sequence],
    folds: int = 5,
    metric: str = "accuracy",
) -> GridResult:
    """Tune learner hyperparameters; ``y`` is binary (any two labels)."""
    X = np.asarray(X, dtype=float)
    y = list(y)
    classes = sorted(set(y), key=lambda c: (str(type(c)), c))
    yb = np.array([classes.index(v) for v in y])
    score = _metric(metric)

    def score_fold(cell, train_idx, test_idx):
        model = train(config.with_params(**cell), X[train_idx], [y[i] for i in train_idx])
        pred = model.predict_proba(X[test_idx]).argmax(axis=1)
        return score(yb[test_idx], pred)

    return cross_validate_cells(iter_grid(grid), score_fold, y, folds, config.seed)
