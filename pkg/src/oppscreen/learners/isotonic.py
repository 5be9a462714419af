"""Weighted isotonic regression by pool-adjacent-violators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def pav(values: Sequence[float], weights: Sequence[float] | None = None) -> list[float]:
    """Non-decreasing fit minimizing ``sum(w * (y - fit)**2)``.

    Adjacent blocks that violate the ordering are pooled into their
    weighted mean until none remain.
    """
    if weights is None:
        weights = [1.0] * len(values)
    means: list[float] = []
    block_w: list[float] = []
    sizes: list[int] = []
    for y, w in zip(values, weights):
        mean, weight, size = float(y), float(w), 1
        while means and means[-1] > mean:
            prev_mean, prev_w = means.pop(), block_w.pop()
            size += sizes.pop()
            mean = (prev_mean * prev_w + mean * weight) / (prev_w + weight)
            weight += prev_w
        means.append(mean)
        block_w.append(weight)
        sizes.append(size)
    out: list[float] = []
    for mean, size in zip(means, sizes):
        out.extend([mean] * size)
    return out


@dataclass(frozen=True)
class IsotonicMap:
    """Piecewise-linear non-decreasing map through fitted breakpoints.

    Inputs outside ``[x[0], x[-1]]`` are clamped to the end values.
    """

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray

    def __call__(self, values) -> np.ndarray:
        return np.interp(np.asarray(values, dtype=float), self.x, self.y)

    def to_json(self) -> dict:
        return {"x": self.x.tolist(), "y": self.y.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "IsotonicMap":
        return cls(np.asarray(data["x"], float), np.asarray(data["y"], float), np.asarray(data["weights"], float))


def fit_isotonic(y: Sequence[float], weights: Sequence[float] | None = None, x: Sequence[float] | None = None) -> IsotonicMap:
    """Fit an isotonic map of ``y`` against ``x`` (default: positions).

    Repeated ``x`` values are merged into their weighted mean before
    pooling, so breakpoints are strictly increasing.
    """
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("isotonic regression needs at least one value")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != y.shape:
        raise ValueError("weights must match values")
    if (w <= 0).any():
        raise ValueError("weights must be strictly positive")
    if not (np.isfinite(y).all() and np.isfinite(w).all()):
        raise ValueError("values and weights must be finite")
    xs = np.arange(y.size, dtype=float) if x is None else np.asarray(x, dtype=float)
    if xs.shape != y.shape:
        raise ValueError("x must match values")

    order = np.argsort(xs, kind="stable")
    xs, y, w = xs[order], y[order], w[order]
    uniq, start = np.unique(xs, return_index=True)
    if uniq.size < xs.size:
        wsum = np.add.reduceat(w, start)
        y = np.add.reduceat(w * y, start) / wsum
        w = wsum
    fitted = np.asarray(pav(y.tolist(), w.tolist()))
    return IsotonicMap(uniq, fitted, w)
