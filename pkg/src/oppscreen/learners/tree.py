"""CART trees with Gini impurity and bagged random forests."""

from __future__ import annotations

import math

import numpy as np

LEAF = -1


class TreeArrays:
    """Flat node arrays; ``feature == LEAF`` marks a leaf."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.counts: list[tuple[int, int]] = []

    def add(self, counts: tuple[int, int]) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.counts.append(counts)
        return len(self.feature) - 1

    def freeze(self) -> "Tree":
        return Tree(
            np.asarray(self.feature, dtype=np.intp),
            np.asarray(self.threshold, dtype=float),
            np.asarray(self.left, dtype=np.intp),
            np.asarray(self.right, dtype=np.intp),
            np.asarray(self.counts, dtype=float).reshape(-1, 2),
        )


class Tree:
    def __init__(self, feature, threshold, left, right, counts):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.counts = counts

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaves(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat != LEAF
            if not active.any():
                return node
            go_left = X[rows, np.where(active, feat, 0)] <= self.threshold[node]
            node = np.where(active, np.where(go_left, self.left[node], self.right[node]), node)

    def leaf_distribution(self, X: np.ndarray) -> np.ndarray:
        counts = self.counts[self.leaves(X)]
        return counts / counts.sum(axis=1, keepdims=True)

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.astype(int).tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Tree":
        return cls(
            np.asarray(data["feature"], dtype=np.intp),
            np.asarray(data["threshold"], dtype=float),
            np.asarray(data["left"], dtype=np.intp),
            np.asarray(data["right"], dtype=np.intp),
            np.asarray(data["counts"], dtype=float).reshape(-1, 2),
        )


def _best_split(X: np.ndarray, idx: np.ndarray, y: np.ndarray, features: np.ndarray, min_leaf: int):
    """Lowest weighted Gini split of rows ``idx`` over ``features``.

    Ties resolve to the earliest feature in ``features`` and then the
    lowest threshold. Returns ``(feature, threshold)`` or None.
    """
    n = y.size
    cols = X[np.ix_(idx, features)]
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    ys = y[order]
    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    left1 = np.cumsum(ys, axis=0)[:-1]
    total1 = left1[-1:] + ys[-1:]
    right1 = total1 - left1
    left0 = n_left - left1
    right0 = n_right - right1
    # n * weighted Gini = n - sum_k c_k^2 / n_side over both sides
    purity = (left1**2 + left0**2) / n_left + (right1**2 + right0**2) / n_right
    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        size_ok = (n_left >= min_leaf) & (n_right >= min_leaf)
        valid &= size_ok
    if not valid.any():
        return None
    score = np.where(valid, np.round(purity, 9), -np.inf).T
    flat = int(np.argmax(score))
    col, pos = divmod(flat, n - 1)
    threshold = (xs[pos, col] + xs[pos + 1, col]) / 2.0
    return int(features[col]), float(threshold)


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    max_depth: int | None = None,
    min_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grow a CART tree on binary targets ``y`` in {0, 1}.

    With ``max_features`` below the feature count, each split inspects a
    random subset of that size, drawing further subsets only when the
    first holds no valid split.
    """
    n_features = X.shape[1]
    subset = n_features if max_features is None else min(max_features, n_features)
    if subset < n_features and rng is None:
        raise ValueError("feature subsampling needs an rng")
    arrays = TreeArrays()
    y = y.astype(float)

    root_counts = (int((y == 0).sum()), int((y == 1).sum()))
    stack = [(arrays.add(root_counts), np.arange(y.size), 0)]
    while stack:
        node, idx, depth = stack.pop()
        n0, n1 = arrays.counts[node]
        if n0 == 0 or n1 == 0 or (max_depth is not None and depth >= max_depth) or idx.size < 2 * min_leaf:
            continue
        yn = y[idx]
        split = None
        if subset >= n_features:
            split = _best_split(X, idx, yn, np.arange(n_features), min_leaf)
        else:
            perm = rng.permutation(n_features)
            for start in range(0, n_features, subset):
                chunk = np.sort(perm[start : start + subset])
                split = _best_split(X, idx, yn, chunk, min_leaf)
                if split is not None:
                    break
        if split is None:
            continue
        feat, thr = split
        go_left = X[idx, feat] <= thr
        left_idx, right_idx = idx[go_left], idx[~go_left]
        left = arrays.add((int((yn[go_left] == 0).sum()), int((yn[go_left] == 1).sum())))
        right = arrays.add((int((yn[~go_left] == 0).sum()), int((yn[~go_left] == 1).sum())))
        arrays.feature[node] = feat
        arrays.threshold[node] = thr
        arrays.left[node] = left
        arrays.right[node] = right
        # right pushed first so the left subtree is grown first
        stack.append((right, right_idx, depth + 1))
        stack.append((left, left_idx, depth + 1))
    return arrays.freeze()


def resolve_max_features(spec, n_features: int) -> int:
    if spec is None or spec == "all":
        return n_features
    if spec == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if spec == "log2":
        return max(1, int(math.log2(n_features))) if n_features > 1 else 1
    if isinstance(spec, float) and 0 < spec <= 1:
        return max(1, int(spec * n_features))
    return max(1, min(int(spec), n_features))
