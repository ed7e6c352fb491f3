"""CART decision trees: Gini classification trees and the squared-error
regression trees used for boosting.

Split search is exhaustive over midpoints of consecutive sorted feature
values, evaluated with prefix sums. Candidates are ranked by
(impurity, feature, threshold) so ties resolve deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ArityMismatch, Hyperparams, check_training_inputs


@dataclass(frozen=True)
class TreeModel:
    """Classification tree as a nested node dict.

    Internal nodes: {"feature": int, "threshold": float, "left": .., "right": ..}
    Leaves: {"counts": [n_class0, n_class1]}
    """

    root: dict

    kind = "tree"

    def proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.array([_leaf_probs(_descend_to_leaf(self.root, row)) for row in X])


@dataclass(frozen=True)
class RegressionTree:
    """Regression tree; leaves carry {"value": float}."""

    root: dict

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.array(
            [_descend_to_leaf(self.root, row)["value"] for row in X], dtype=np.float64
        )


def _descend_to_leaf(node: dict, row: np.ndarray) -> dict:
    while "feature" in node:
        if len(row) <= node["feature"]:
            raise ArityMismatch(
                f"row has {len(row)} features, tree needs index {node['feature']}"
            )
        node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
    return node


def _leaf_probs(leaf: dict) -> tuple[float, float]:
    c0, c1 = leaf["counts"]
    total = c0 + c1
    return (c0 / total, c1 / total)


def gini(counts) -> float:
    """Gini impurity from per-class counts."""
    total = sum(counts)
    if total == 0:
        return 0.0
    return 1.0 - sum((c / total) ** 2 for c in counts)


def best_gini_split(X: np.ndarray, y: np.ndarray, feature_ids) -> tuple | None:
    """Lowest weighted-Gini split over the given features.

    Returns (weighted_gini, feature, threshold) or None when no feature
    admits a split. Ties pick the smallest (feature, threshold).
    """
    n = X.shape[0]
    best = None
    for f in sorted(feature_ids):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ones = np.cumsum(y[order])
        total_ones = ones[-1]

        cut = np.nonzero(xs[:-1] < xs[1:])[0]
        if len(cut) == 0:
            continue
        left_n = cut + 1.0
        right_n = n - left_n
        left1 = ones[cut].astype(np.float64)
        left0 = left_n - left1
        right1 = total_ones - left1
        right0 = right_n - right1

        gini_left = 1.0 - (left0**2 + left1**2) / left_n**2
        gini_right = 1.0 - (right0**2 + right1**2) / right_n**2
        weighted = (left_n * gini_left + right_n * gini_right) / n

        i = int(np.argmin(weighted))
        threshold = (xs[cut[i]] + xs[cut[i] + 1]) / 2.0
        candidate = (float(weighted[i]), int(f), float(threshold))
        if best is None or candidate < best:
            best = candidate
    return best


def best_mse_split(X: np.ndarray, r: np.ndarray, feature_ids) -> tuple | None:
    """Lowest total-squared-error split for regression targets r.

    Returns (sse, feature, threshold) or None; same tie rule as Gini.
    """
    n = X.shape[0]
    best = None
    for f in sorted(feature_ids):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        rs = r[order]
        csum = np.cumsum(rs)
        csq = np.cumsum(rs**2)
        total_sum = csum[-1]
        total_sq = csq[-1]

        cut = np.nonzero(xs[:-1] < xs[1:])[0]
        if len(cut) == 0:
            continue
        left_n = cut + 1.0
        right_n = n - left_n
        left_sum = csum[cut]
        left_sq = csq[cut]
        sse_left = left_sq - left_sum**2 / left_n
        sse_right = (total_sq - left_sq) - (total_sum - left_sum) ** 2 / right_n
        sse = sse_left + sse_right

        i = int(np.argmin(sse))
        threshold = (xs[cut[i]] + xs[cut[i] + 1]) / 2.0
        candidate = (float(sse[i]), int(f), float(threshold))
        if best is None or candidate < best:
            best = candidate
    return best


def _grow_classification(X, y, depth, max_depth, min_samples_split, feature_sampler):
    counts = [int(np.sum(y == 0)), int(np.sum(y == 1))]
    n = len(y)
    if (
        depth >= max_depth
        or n < min_samples_split
        or counts[0] == 0
        or counts[1] == 0
    ):
        return {"counts": counts}

    split = best_gini_split(X, y, feature_sampler(X.shape[1]))
    if split is None or split[0] >= gini(counts):
        return {"counts": counts}

    _, f, t = split
    mask = X[:, f] <= t
    return {
        "feature": f,
        "threshold": t,
        "left": _grow_classification(
            X[mask], y[mask], depth + 1, max_depth, min_samples_split, feature_sampler
        ),
        "right": _grow_classification(
            X[~mask], y[~mask], depth + 1, max_depth, min_samples_split, feature_sampler
        ),
    }


def train_tree(X, y, hp: Hyperparams) -> TreeModel:
    """Greedy CART growth with Gini impurity; stops at max_depth,
    min_samples_split, or node purity."""
    X, y = check_training_inputs(X, y)
    p = hp.tree
    root = _grow_classification(
        X, y, 0, p.max_depth, p.min_samples_split, lambda d: range(d)
    )
    return TreeModel(root=root)


def grow_classification_tree(X, y, max_depth, min_samples_split, feature_sampler):
    """Forest entry point: grow one tree with per-node feature sampling."""
    return _grow_classification(X, y, 0, max_depth, min_samples_split, feature_sampler)


def _grow_regression(X, r, g_num, h_den, depth, max_depth):
    # Leaf value is the Newton step sum(g)/sum(h) computed by the caller's
    # gradient/hessian vectors; plain mean fitting passes h = ones.
    n = len(r)
    parent_sse = float(np.sum(r**2) - np.sum(r) ** 2 / n)
    if depth >= max_depth or n < 2:
        return _regression_leaf(g_num, h_den)

    split = best_mse_split(X, r, range(X.shape[1]))
    if split is None or split[0] >= parent_sse:
        return _regression_leaf(g_num, h_den)

    _, f, t = split
    mask = X[:, f] <= t
    return {
        "feature": f,
        "threshold": t,
        "left": _grow_regression(
            X[mask], r[mask], g_num[mask], h_den[mask], depth + 1, max_depth
        ),
        "right": _grow_regression(
            X[~mask], r[~mask], g_num[~mask], h_den[~mask], depth + 1, max_depth
        ),
    }


def _regression_leaf(g_num, h_den):
    denom = max(float(np.sum(h_den)), 1e-12)
    return {"value": float(np.sum(g_num)) / denom}


def fit_regression_tree(X, targets, max_depth, leaf_numerator=None, leaf_denominator=None):
    """Fit a squared-error tree to targets; optional Newton leaf values."""
    X = np.asarray(X, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    g = targets if leaf_numerator is None else np.asarray(leaf_numerator, dtype=np.float64)
    h = (
        np.ones_like(targets)
        if leaf_denominator is None
        else np.asarray(leaf_denominator, dtype=np.float64)
    )
    return RegressionTree(root=_grow_regression(X, targets, g, h, 0, max_depth))
